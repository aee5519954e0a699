use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::config::{config_lines, ConfigLine, DEFAULT_RUN_SETTINGS};
use crate::error::{Error, Result};
use crate::fragment::{FragmentType, FragmentationSettings, LevelSettings};
use crate::glycan::{Chemistry, Derivatization};
use crate::ion::{ChargeCarrier, ExchangeKind, IonSettings, MzTolerance, NeutralLoss, Species};
use crate::sage::SmoothingConfig;
use crate::scalar::{parse_scalar, Scalar};

/// Everything a run needs besides the spectra and the database.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings<T: Scalar = f64> {
    pub ms1_tolerance: MzTolerance<T>,
    pub msn_tolerance: MzTolerance<T>,
    pub ion: IonSettings<T>,
    /// Losses that only apply to permethylated glycans.
    pub permethylated_only_losses: Vec<String>,
    pub fragmentation: FragmentationSettings,
    pub derivatization: Derivatization,
    pub max_undermethylation: u32,
    pub max_ms_level: u8,
    pub database: Option<PathBuf>,
    /// Root-label m/z bucket width of the graph model, in Da.
    pub bucket_width: T,
    pub smoothing: SmoothingConfig<T>,
    pub top_k: Option<usize>,
    pub min_probability: Option<T>,
    pub parallel: bool,
}

impl<T: Scalar> RunSettings<T> {
    /// The shipped defaults.
    pub fn defaults(chem: &Chemistry<T>) -> Self {
        Self::parse(DEFAULT_RUN_SETTINGS, chem).expect("shipped run settings parse")
    }

    /// Parses a run-settings file. Keys missing from `text` keep the shipped
    /// defaults; directives (`carrier`, `exchange`, `loss`) replace the
    /// default list of their kind when present at all.
    pub fn parse(text: &str, chem: &Chemistry<T>) -> Result<Self> {
        let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
        let mut directives: BTreeMap<&str, Vec<(usize, Vec<String>)>> = BTreeMap::new();
        for (source, is_default) in [(DEFAULT_RUN_SETTINGS, true), (text, false)] {
            let mut seen_kinds: Vec<&str> = Vec::new();
            for line in config_lines(source) {
                match line {
                    ConfigLine::Entry { line, key, value } => {
                        entries.insert(key.to_string(), (line, value.to_string()));
                    }
                    ConfigLine::Directive { line, words } => {
                        let kind = match words[0] {
                            "carrier" => "carrier",
                            "exchange" => "exchange",
                            "loss" => "loss",
                            other => return Err(Error::parse(line, format!("unknown directive `{other}`"))),
                        };
                        if !is_default && !seen_kinds.contains(&kind) {
                            directives.remove(kind);
                            seen_kinds.push(kind);
                        }
                        directives.entry(kind).or_default().push((line, words[1..].iter().map(|w| w.to_string()).collect()));
                    }
                }
            }
        }

        let get = |key: &str| entries.get(key).map(|(l, v)| (*l, v.as_str()));
        let required = |key: &str| get(key).ok_or_else(|| Error::Config(format!("missing setting `{key}`")));
        let uint = |key: &str| -> Result<u32> {
            let (line, v) = required(key)?;
            v.parse().map_err(|_| Error::parse(line, format!("`{key}` must be a non-negative integer")))
        };
        let tolerance = |key: &str| -> Result<MzTolerance<T>> {
            let (line, v) = required(key)?;
            v.parse().map_err(|e: Error| Error::parse(line, e.to_string()))
        };

        let derivatization = match required("derivatization")? {
            (_, "native") => Derivatization::Native,
            (_, "permethylated") => Derivatization::Permethylated,
            (line, other) => return Err(Error::parse(line, format!("unknown derivatization `{other}`"))),
        };
        let max_ms_level = u8::try_from(uint("max_ms_level")?)
            .ok()
            .filter(|l| *l >= 2)
            .ok_or_else(|| Error::Config("max_ms_level must be between 2 and 255".into()))?;
        let max_charge = uint("max_charge")?;
        if max_charge == 0 {
            return Err(Error::Config("max_charge must be at least 1".into()));
        }

        let mut carriers = Vec::new();
        for (line, words) in directives.get("carrier").into_iter().flatten() {
            carriers.push(parse_carrier(*line, words, chem)?);
        }
        let mut exchanges = Vec::new();
        for (line, words) in directives.get("exchange").into_iter().flatten() {
            let [out_species, in_species] = words.as_slice() else {
                return Err(Error::parse(*line, "expected `exchange <out> <in>`"));
            };
            exchanges.push(ExchangeKind {
                out_species: parse_species(*line, out_species, chem)?,
                in_species: parse_species(*line, in_species, chem)?,
            });
        }
        let mut losses = Vec::new();
        let mut permethylated_only_losses = Vec::new();
        for (line, words) in directives.get("loss").into_iter().flatten() {
            let (loss, permethylated_only) = parse_loss(*line, words, chem)?;
            if permethylated_only {
                permethylated_only_losses.push(loss.name.clone());
            }
            losses.push(loss);
        }

        let mut fragmentation = FragmentationSettings::default();
        for level in 2..=max_ms_level {
            fragmentation.set(level, level_settings(&entries, level)?);
        }
        for key in entries.keys() {
            if let Some(rest) = key.strip_prefix("fragment.") {
                let scope = rest.split('.').next().unwrap_or_default();
                if scope != "default" && scope.parse::<u8>().map_or(true, |l| l < 2 || l > max_ms_level) {
                    return Err(Error::Config(format!("`{key}` names no MS level in 2..={max_ms_level}")));
                }
            } else if !KNOWN_KEYS.contains(&key.as_str()) {
                let line = entries[key].0;
                return Err(Error::parse(line, format!("unknown setting `{key}`")));
            }
        }

        let bucket_width = {
            let (line, v) = required("bucket_width")?;
            parse_scalar::<T>(v).filter(|w| *w > T::zero()).ok_or_else(|| Error::parse(line, "bucket_width must be positive"))?
        };
        let smoothing = {
            let (line, v) = required("smoothing")?;
            v.parse().map_err(|e: Error| Error::parse(line, e.to_string()))?
        };
        let top_k = match get("top_k") {
            None | Some((_, "none")) => None,
            Some((line, v)) => Some(v.parse().ok().filter(|k| *k >= 1).ok_or_else(|| Error::parse(line, "top_k must be a positive integer or `none`"))?),
        };
        let min_probability = match get("min_probability") {
            None | Some((_, "none")) => None,
            Some((line, v)) => Some(parse_scalar(v).ok_or_else(|| Error::parse(line, "bad min_probability"))?),
        };
        let parallel = match get("parallel") {
            None | Some((_, "false")) => false,
            Some((_, "true")) => true,
            Some((line, _)) => return Err(Error::parse(line, "parallel must be true or false")),
        };

        Ok(Self {
            ms1_tolerance: tolerance("ms1_tolerance")?,
            msn_tolerance: tolerance("msn_tolerance")?,
            ion: IonSettings { max_charge, carriers, exchanges, max_exchanges: uint("max_exchanges")?, losses },
            permethylated_only_losses,
            fragmentation,
            derivatization,
            max_undermethylation: uint("max_undermethylation")?,
            max_ms_level,
            database: get("database").map(|(_, v)| PathBuf::from(v)),
            bucket_width,
            smoothing,
            top_k,
            min_probability,
            parallel,
        })
    }

    /// Losses that apply under the run's derivatization.
    pub fn active_losses(&self) -> Vec<NeutralLoss<T>> {
        self.ion
            .losses
            .iter()
            .filter(|l| self.derivatization == Derivatization::Permethylated || !self.permethylated_only_losses.contains(&l.name))
            .cloned()
            .collect()
    }
}

const KNOWN_KEYS: &[&str] = &[
    "ms1_tolerance",
    "msn_tolerance",
    "max_charge",
    "max_exchanges",
    "max_ms_level",
    "derivatization",
    "max_undermethylation",
    "database",
    "bucket_width",
    "smoothing",
    "top_k",
    "min_probability",
    "parallel",
];

fn level_settings(entries: &BTreeMap<String, (usize, String)>, level: u8) -> Result<LevelSettings> {
    let lookup = |field: &str| {
        entries
            .get(&format!("fragment.{level}.{field}"))
            .or_else(|| entries.get(&format!("fragment.default.{field}")))
            .map(|(l, v)| (*l, v.as_str()))
    };
    let mut settings = LevelSettings::default();
    if let Some((line, v)) = lookup("types") {
        let mut types: Vec<FragmentType> =
            list(v).map(str::parse).collect::<Result<_>>().map_err(|e| Error::parse(line, e.to_string()))?;
        types.sort_unstable();
        types.dedup();
        settings.types = types;
    }
    if let Some((line, v)) = lookup("max_cleavages") {
        settings.max_cleavages = v.parse().map_err(|_| Error::parse(line, "max_cleavages must be a non-negative integer"))?;
    }
    if let Some((_, v)) = lookup("losses") {
        settings.losses = list(v).map(str::to_string).collect();
    }
    if let Some((line, v)) = lookup("max_undermethylation") {
        settings.max_undermethylation =
            v.parse().map_err(|_| Error::parse(line, "max_undermethylation must be a non-negative integer"))?;
    }
    Ok(settings)
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty() && *s != "none")
}

fn options(line: usize, words: &[String]) -> Result<BTreeMap<String, String>> {
    words
        .iter()
        .map(|w| {
            w.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::parse(line, format!("expected key=value, found `{w}`")))
        })
        .collect()
}

fn mass_option<T: Scalar>(line: usize, opts: &BTreeMap<String, String>, chem: &Chemistry<T>) -> Result<T> {
    match (opts.get("mass"), opts.get("formula")) {
        (Some(m), None) => parse_scalar(m).ok_or_else(|| Error::parse(line, format!("bad mass `{m}`"))),
        (None, Some(f)) => chem.formula_text_mass(f).map_err(|e| Error::parse(line, e.to_string())),
        _ => Err(Error::parse(line, "give exactly one of mass= or formula=")),
    }
}

fn parse_carrier<T: Scalar>(line: usize, words: &[String], chem: &Chemistry<T>) -> Result<ChargeCarrier<T>> {
    let (name, rest) = words.split_first().ok_or_else(|| Error::parse(line, "carrier needs a name"))?;
    let opts = options(line, rest)?;
    let charge: i32 = opts
        .get("charge")
        .and_then(|c| c.trim_start_matches('+').parse().ok())
        .ok_or_else(|| Error::parse(line, "carrier needs an integer charge="))?;
    let mass = mass_option(line, &opts, chem)?;
    ChargeCarrier::new(name.clone(), charge, mass).map_err(|e| Error::parse(line, e.to_string()))
}

fn parse_species<T: Scalar>(line: usize, word: &str, chem: &Chemistry<T>) -> Result<Species<T>> {
    let (name, mass) = match word.split_once(':') {
        Some((name, mass)) => (name, parse_scalar(mass).ok_or_else(|| Error::parse(line, format!("bad mass in `{word}`")))?),
        None => (word, chem.formula_text_mass(word).map_err(|e| Error::parse(line, e.to_string()))?),
    };
    Species::new(name, mass).map_err(|e| Error::parse(line, e.to_string()))
}

fn parse_loss<T: Scalar>(line: usize, words: &[String], chem: &Chemistry<T>) -> Result<(NeutralLoss<T>, bool)> {
    let (name, rest) = words.split_first().ok_or_else(|| Error::parse(line, "loss needs a name"))?;
    let mut opts = options(line, rest)?;
    let max_count = match opts.remove("max") {
        Some(m) => m.parse().map_err(|_| Error::parse(line, "max must be a non-negative integer"))?,
        None => 1,
    };
    let permethylated_only = match opts.remove("requires").as_deref() {
        None => false,
        Some("permethylated") => true,
        Some(other) => return Err(Error::parse(line, format!("unknown requirement `{other}`"))),
    };
    let mass = mass_option(line, &opts, chem)?;
    let loss = NeutralLoss::new(name.clone(), mass, max_count).map_err(|e| Error::parse(line, e.to_string()))?;
    Ok((loss, permethylated_only))
}
