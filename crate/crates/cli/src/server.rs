//! Curation HTTP service: serves scans and annotations, records analyst
//! decisions in the selection log and retrains the graph on demand.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::OpenOptions;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{Context, Result};
use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use glycoannot::engine::{AnnotationRecord, RunSettings};
use glycoannot::sage::{
    post_filter, training_examples, AnnotationKey, ApprovedAnnotationSet, FilterPolicy, SageGraph, ScoringParams, Selection,
};
use glycoannot::spectra::{ScanId, ScanTree};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::RwLock;

use crate::commands::ServeArgs;
use crate::files::{self, ConfigHome};

const DEFAULT_PAGE: usize = 500;

/// Everything one curation session works on.
pub struct Curation {
    pub tree: ScanTree,
    pub records: Vec<AnnotationRecord>,
    pub settings: RunSettings,
    pub selections: ApprovedAnnotationSet,
    pub selections_path: PathBuf,
    /// Model training starts from.
    pub base: SageGraph,
    pub graph: SageGraph,
    pub model_out: Option<PathBuf>,
    keys: BTreeSet<AnnotationKey>,
    /// Graph probability per (MS2 scan, glycan) from the last training.
    probabilities: BTreeMap<(ScanId, String), f64>,
}

impl Curation {
    pub fn new(
        tree: ScanTree,
        records: Vec<AnnotationRecord>,
        settings: RunSettings,
        selections_path: PathBuf,
        base: SageGraph,
        model_out: Option<PathBuf>,
    ) -> Result<Self> {
        let selections = files::load_selections(&selections_path)?;
        let keys = records.iter().map(|r| (r.scan_id, r.glycan_id.clone(), r.config_key())).collect();
        let mut session = Self {
            tree,
            records,
            settings,
            selections,
            selections_path,
            graph: base.clone(),
            base,
            model_out,
            keys,
            probabilities: BTreeMap::new(),
        };
        session.refresh_probabilities();
        Ok(session)
    }

    fn params(&self) -> ScoringParams {
        ScoringParams::from_settings(&self.settings)
    }

    fn refresh_probabilities(&mut self) {
        self.probabilities.clear();
        if self.graph.node_count() == 0 {
            return;
        }
        let outcome = post_filter(&self.graph, &self.tree, &self.records, &self.params(), FilterPolicy::MinProbability(0.0));
        for (scan, ranked) in outcome.survivors {
            for (glycan, p) in ranked {
                self.probabilities.insert((scan, glycan), p);
            }
        }
    }

    fn probability(&self, record: &AnnotationRecord) -> Option<f64> {
        let ms2 = self.tree.ancestor_at(record.scan_id, 2)?;
        self.probabilities.get(&(ms2.scan_id, record.glycan_id.clone())).copied()
    }

    /// Appends the decision to the selection log and syncs it to disk.
    fn record_decision(&mut self, selection: Selection) -> Result<()> {
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.selections_path)
            .with_context(|| format!("opening {}", self.selections_path.display()))?;
        writeln!(file, "{selection}")?;
        file.sync_data()?;
        self.selections.push(selection);
        Ok(())
    }

    /// Retrains from the base model on the current approved set.
    pub fn retrain(&mut self) -> glycoannot::Result<usize> {
        let examples =
            training_examples(&self.selections.approved_keys(), &self.records, &self.tree, self.settings.bucket_width)?;
        let mut graph = self.base.clone();
        graph.train(&examples)?;
        self.graph = graph;
        self.refresh_probabilities();
        Ok(examples.len())
    }
}

pub type SharedCuration = Arc<RwLock<Curation>>;

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

fn bad_request(message: impl Into<String>) -> ApiError {
    ApiError(StatusCode::BAD_REQUEST, message.into())
}

fn internal(error: impl std::fmt::Display) -> ApiError {
    ApiError(StatusCode::INTERNAL_SERVER_ERROR, error.to_string())
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| bad_request(format!("malformed body: {e}")))
}

pub fn router(state: SharedCuration) -> Router {
    Router::new()
        .route("/scans", get(list_scans))
        .route("/scans/{id}", get(scan_detail))
        .route("/decisions", post(post_decision))
        .route("/selections", get(list_selections))
        .route("/train", post(post_train))
        .route("/filter", post(post_filter_request))
        .route("/model/stats", get(model_stats))
        .with_state(state)
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ScanSummary {
    pub id: ScanId,
    pub level: u8,
    pub precursor_mz: Option<f64>,
    pub peak_count: usize,
    pub annotation_count: usize,
}

async fn list_scans(State(state): State<SharedCuration>) -> Json<Vec<ScanSummary>> {
    let s = state.read().await;
    let mut counts: BTreeMap<ScanId, usize> = BTreeMap::new();
    for r in &s.records {
        *counts.entry(r.scan_id).or_default() += 1;
    }
    Json(
        s.tree
            .scans()
            .map(|scan| ScanSummary {
                id: scan.scan_id,
                level: scan.ms_level,
                precursor_mz: scan.precursor_mz,
                peak_count: scan.peaks.len(),
                annotation_count: counts.get(&scan.scan_id).copied().unwrap_or(0),
            })
            .collect(),
    )
}

#[derive(Debug, Deserialize)]
struct PeakPage {
    offset: Option<usize>,
    limit: Option<usize>,
}

async fn scan_detail(
    State(state): State<SharedCuration>,
    Path(id): Path<String>,
    Query(page): Query<PeakPage>,
) -> Result<Json<Value>, ApiError> {
    let s = state.read().await;
    let scan = id
        .parse::<ScanId>()
        .ok()
        .and_then(|id| s.tree.get(id))
        .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("unknown scan `{id}`")))?;
    let max = scan.peaks.iter().map(|p| p.intensity).fold(0.0, f64::max);
    let (offset, limit) = (page.offset.unwrap_or(0), page.limit.unwrap_or(DEFAULT_PAGE));
    let peaks: Vec<Value> = scan
        .peaks
        .iter()
        .enumerate()
        .skip(offset)
        .take(limit)
        .map(|(index, p)| {
            let relative = if max > 0.0 { p.intensity / max } else { 0.0 };
            json!({ "index": index, "mz": p.mz, "intensity": p.intensity, "relative_intensity": relative })
        })
        .collect();
    let current = s.selections.current();
    let annotations: Vec<Value> = s
        .records
        .iter()
        .filter(|r| r.scan_id == scan.scan_id)
        .map(|r| {
            let key = (r.scan_id, r.glycan_id.clone(), r.config_key());
            json!({
                "glycan": r.glycan_id,
                "config": r.config_key(),
                "ion": r.ion_signature,
                "candidate": r.candidate_signature,
                "score_c": r.score_c,
                "score_i": r.score_i,
                "probability": s.probability(r),
                "decision": current.get(&key).map(|sel| sel.approved),
                "diagnostic": r.diagnostic,
                "peaks": r.peak_annotations.iter().map(|a| json!({
                    "peak_index": a.peak_index,
                    "fragment": a.fragment_signature,
                    "ion": a.ion_signature,
                    "theoretical_mz": a.theoretical_mz,
                    "delta": a.delta,
                })).collect::<Vec<_>>(),
            })
        })
        .collect();
    Ok(Json(json!({
        "id": scan.scan_id,
        "level": scan.ms_level,
        "precursor_mz": scan.precursor_mz,
        "precursor_charge": scan.precursor_charge,
        "parent": scan.parent_scan_id,
        "children": s.tree.children(scan.scan_id),
        "peak_count": scan.peaks.len(),
        "offset": offset,
        "limit": limit,
        "peaks": peaks,
        "annotations": annotations,
    })))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Decision {
    pub scan: ScanId,
    pub glycan: String,
    pub config: String,
    pub approved: bool,
    #[serde(default)]
    pub reviewer: Option<String>,
    #[serde(default)]
    pub timestamp: Option<String>,
}

impl From<&Selection> for Decision {
    fn from(s: &Selection) -> Self {
        Self {
            scan: s.scan_id,
            glycan: s.glycan_id.clone(),
            config: s.config.clone(),
            approved: s.approved,
            reviewer: Some(s.reviewer.clone()),
            timestamp: Some(s.timestamp.clone()),
        }
    }
}

fn token(field: &str, value: Option<String>, default: impl FnOnce() -> String) -> Result<String, ApiError> {
    let value = value.unwrap_or_else(default);
    if value.is_empty() || value.contains(char::is_whitespace) {
        return Err(bad_request(format!("`{field}` must be a non-empty token without whitespace")));
    }
    Ok(value)
}

async fn post_decision(State(state): State<SharedCuration>, body: Bytes) -> Result<Json<Decision>, ApiError> {
    let d: Decision = parse_body(&body)?;
    let glycan = token("glycan", Some(d.glycan), String::new)?;
    let config = token("config", Some(d.config), String::new)?;
    let reviewer = token("reviewer", d.reviewer, || "analyst".to_string())?;
    let timestamp =
        token("timestamp", d.timestamp, || chrono::Utc::now().format("%Y-%m-%dT%H:%M:%SZ").to_string())?;
    let mut s = state.write().await;
    if s.tree.get(d.scan).is_none() {
        return Err(ApiError(StatusCode::NOT_FOUND, format!("unknown scan {}", d.scan)));
    }
    let selection = Selection { scan_id: d.scan, glycan_id: glycan, config, approved: d.approved, reviewer, timestamp };
    if !s.keys.contains(&selection.key()) {
        return Err(ApiError(
            StatusCode::CONFLICT,
            format!("scan {} has no annotation `{}` with config `{}`", d.scan, selection.glycan_id, selection.config),
        ));
    }
    let response = Decision::from(&selection);
    s.record_decision(selection).map_err(internal)?;
    Ok(Json(response))
}

async fn list_selections(State(state): State<SharedCuration>) -> Json<Value> {
    let s = state.read().await;
    let current: Vec<Decision> = s.selections.current().values().map(|sel| Decision::from(*sel)).collect();
    Json(json!({ "decisions": s.selections.selections.len(), "selections": current }))
}

fn stats_json(graph: &SageGraph) -> Value {
    let stats = graph.stats();
    json!({
        "nodes": stats.nodes,
        "edges": stats.edges,
        "levels": graph.levels(),
        "nodes_per_level": stats.nodes_per_level,
        "edges_per_level": stats.edges_per_level,
    })
}

async fn post_train(State(state): State<SharedCuration>) -> Result<Json<Value>, ApiError> {
    let mut s = state.write().await;
    let examples = s.retrain().map_err(|e| match e {
        glycoannot::Error::MissingParentLinkage { .. } | glycoannot::Error::InvalidScan { .. } => {
            ApiError(StatusCode::CONFLICT, e.to_string())
        }
        other => internal(other),
    })?;
    if let Some(path) = s.model_out.clone() {
        files::save_model(&path, &s.graph).map_err(internal)?;
    }
    let mut body = stats_json(&s.graph);
    body["examples"] = json!(examples);
    Ok(Json(body))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FilterRequest {
    top_k: Option<usize>,
    min_probability: Option<f64>,
}

async fn post_filter_request(State(state): State<SharedCuration>, body: Bytes) -> Result<Json<Value>, ApiError> {
    let request: FilterRequest = parse_body(&body)?;
    let policy = match (request.top_k, request.min_probability) {
        (Some(k), None) => FilterPolicy::TopK(k),
        (None, Some(p)) => format!("min-probability={p}").parse().map_err(|e: glycoannot::Error| bad_request(e.to_string()))?,
        _ => return Err(bad_request("give exactly one of `top_k` and `min_probability`")),
    };
    let s = state.read().await;
    let outcome = post_filter(&s.graph, &s.tree, &s.records, &s.params(), policy);
    let kept = outcome.keep.iter().filter(|k| **k).count();
    let scans: Vec<Value> = outcome
        .survivors
        .iter()
        .map(|(scan, ranked)| {
            json!({
                "scan": scan,
                "glycans": ranked.iter().map(|(g, p)| json!({ "glycan": g, "probability": p })).collect::<Vec<_>>(),
            })
        })
        .collect();
    Ok(Json(json!({
        "policy": policy.to_string(),
        "kept": kept,
        "total": s.records.len(),
        "keep": outcome.keep,
        "scans": scans,
    })))
}

async fn model_stats(State(state): State<SharedCuration>) -> Json<Value> {
    Json(stats_json(&state.read().await.graph))
}

pub fn serve(args: ServeArgs, home: &ConfigHome) -> Result<()> {
    let chem = home.chemistry()?;
    let settings = home.settings(args.settings.settings.as_deref(), &chem)?;
    let tree = files::load_spectra(&args.spectra)?;
    let records = files::load_archive(&args.archive)?;
    let base = match &args.model_in {
        Some(path) => files::load_model(path)?,
        None => SageGraph::new(),
    };
    let session = Curation::new(tree, records, settings, args.selections, base, args.model_out)?;
    let app = router(Arc::new(RwLock::new(session)));
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind((args.bind.as_str(), args.port))
            .await
            .with_context(|| format!("binding {}:{}", args.bind, args.port))?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, app).await?;
        Ok(())
    })
}
