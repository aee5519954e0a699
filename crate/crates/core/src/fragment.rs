//! In-silico glycosidic fragmentation (B/C/Y/Z ions), including internal
//! fragments from several cleavages and re-fragmentation of fragments for
//! MS^n.
//!
//! A fragment is a connected piece K of the precursor. Every linkage on K's
//! boundary is a cleavage; the piece lies on the non-reducing side of at most
//! one of them (typed B or C) and on the reducing side of the rest (typed Y
//! or Z). Masses follow from the residue sum of K:
//!
//! ```text
//! mass(K) = sum(residues in K) + H2O - H2O * #(B and Z ends)
//!         [+ CH2 * (sites(K) - #cleavages - missing)   when permethylated]
//! ```
//!
//! For a single cleavage of a precursor of mass M this gives
//! Y = R + H2O, Z = R, B = M - Y and C = B + H2O, R being the reducing-side
//! residue sum. `sites(K)` counts K's methylatable positions as if it were a
//! free glycan; each cleavage leaves one of them unmethylated.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::glycan::{Chemistry, DerivatizationState, GlycanStructure};
use crate::scalar::Scalar;

/// Upper bound on fragments enumerated from a single precursor.
pub const FRAGMENT_CAP: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FragmentType {
    B,
    C,
    Y,
    Z,
}

impl FragmentType {
    pub const ALL: [FragmentType; 4] = [FragmentType::B, FragmentType::C, FragmentType::Y, FragmentType::Z];

    /// Y and Z keep the reducing side of the cleaved linkage.
    pub fn keeps_reducing_side(self) -> bool {
        matches!(self, FragmentType::Y | FragmentType::Z)
    }

    /// B and Z lack the water that C and Y retain.
    fn loses_water(self) -> bool {
        matches!(self, FragmentType::B | FragmentType::Z)
    }

    pub fn letter(self) -> char {
        match self {
            FragmentType::B => 'B',
            FragmentType::C => 'C',
            FragmentType::Y => 'Y',
            FragmentType::Z => 'Z',
        }
    }
}

impl fmt::Display for FragmentType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for FragmentType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "B" => Ok(FragmentType::B),
            "C" => Ok(FragmentType::C),
            "Y" => Ok(FragmentType::Y),
            "Z" => Ok(FragmentType::Z),
            other => Err(Error::Config(format!("unknown fragment type `{other}` (cross-ring ions are not supported)"))),
        }
    }
}

/// A cleaved linkage, identified by the preorder index of its child residue,
/// and the ion type on this fragment's side of it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cleavage {
    pub edge: usize,
    pub kind: FragmentType,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelSettings {
    pub types: Vec<FragmentType>,
    pub max_cleavages: u32,
    /// Names of the neutral losses allowed on fragment ions at this level.
    pub losses: Vec<String>,
    pub max_undermethylation: u32,
}

impl Default for LevelSettings {
    fn default() -> Self {
        Self {
            types: FragmentType::ALL.to_vec(),
            max_cleavages: 2,
            losses: vec!["H2O".into(), "MeOH".into()],
            max_undermethylation: 1,
        }
    }
}

impl LevelSettings {
    pub fn with_types(types: &[FragmentType], max_cleavages: u32) -> Self {
        Self { types: types.to_vec(), max_cleavages, losses: Vec::new(), max_undermethylation: 0 }
    }
}

/// Per-MS-level fragmentation rules, defined for levels 2..=max.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FragmentationSettings {
    levels: BTreeMap<u8, LevelSettings>,
}

impl FragmentationSettings {
    pub fn uniform(max_ms_level: u8, level: LevelSettings) -> Self {
        Self { levels: (2..=max_ms_level).map(|l| (l, level.clone())).collect() }
    }

    pub fn set(&mut self, ms_level: u8, level: LevelSettings) {
        self.levels.insert(ms_level, level);
    }

    pub fn level(&self, ms_level: u8) -> Result<&LevelSettings> {
        self.levels.get(&ms_level).ok_or(Error::UndefinedLevel(ms_level))
    }

    pub fn levels(&self) -> impl Iterator<Item = (u8, &LevelSettings)> {
        self.levels.iter().map(|(l, s)| (*l, s))
    }
}

/// Something that can be fragmented: an intact glycan or a fragment of one
/// carried forward to the next MS level with its cleavage ends intact.
#[derive(Debug, Clone, PartialEq)]
pub struct Precursor<T: Scalar = f64> {
    pub glycan: Arc<GlycanStructure>,
    /// Sorted node indices of the piece.
    pub members: Vec<usize>,
    pub cleavages: Vec<Cleavage>,
    pub derivatization: DerivatizationState,
    pub neutral_mass: T,
    pub signature: String,
}

impl<T: Scalar> Precursor<T> {
    pub fn intact(glycan: Arc<GlycanStructure>, derivatization: DerivatizationState, chem: &Chemistry<T>) -> Result<Self> {
        let members: Vec<usize> = (0..glycan.len()).collect();
        let neutral_mass = piece_mass(&glycan, &members, &[], derivatization, chem)?;
        let signature = format!("{}|M|u{}", glycan.id(), derivatization.missing_methyls);
        Ok(Self { glycan, members, cleavages: Vec::new(), derivatization, neutral_mass, signature })
    }

    pub fn is_intact(&self) -> bool {
        self.cleavages.is_empty()
    }

    /// Node closest to the reducing end.
    fn top(&self) -> usize {
        self.members[0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FragmentIon<T: Scalar = f64> {
    /// Signature of the precursor this fragment was generated from.
    pub parent_id: String,
    pub glycan: Arc<GlycanStructure>,
    pub members: Vec<usize>,
    /// All boundary cleavages, sorted by edge; inherited ones included.
    pub cleavages: Vec<Cleavage>,
    /// Cleavages introduced at this level.
    pub new_cleavages: u32,
    pub derivatization: DerivatizationState,
    pub neutral_mass: T,
    pub signature: String,
}

impl<T: Scalar> FragmentIon<T> {
    /// The fragment's residues as a standalone structure, id'd by signature.
    pub fn substructure(&self) -> GlycanStructure {
        self.glycan.induced(self.signature.clone(), &self.members)
    }

    /// True when the piece contains the glycan's reducing end.
    pub fn has_reducing_end(&self) -> bool {
        self.members.first() == Some(&0)
    }

    /// Sorted letters of the cleavage types, e.g. `B+Y`.
    pub fn type_pattern(&self) -> String {
        let mut letters: Vec<char> = self.cleavages.iter().map(|c| c.kind.letter()).collect();
        letters.sort_unstable();
        letters.iter().map(char::to_string).collect::<Vec<_>>().join("+")
    }
}

/// Turns a fragment into a precursor for the next MS level, keeping its
/// cleavage ends so that further fragments stay in the original glycan's
/// coordinates.
pub fn fragment_as_precursor<T: Scalar>(fragment: &FragmentIon<T>) -> Precursor<T> {
    Precursor {
        glycan: Arc::clone(&fragment.glycan),
        members: fragment.members.clone(),
        cleavages: fragment.cleavages.clone(),
        derivatization: fragment.derivatization,
        neutral_mass: fragment.neutral_mass,
        signature: fragment.signature.clone(),
    }
}

fn signature(glycan_id: &str, cleavages: &[Cleavage], missing: u32) -> String {
    let cuts = cleavages.iter().map(|c| format!("{}{}", c.kind.letter(), c.edge)).collect::<Vec<_>>().join("+");
    format!("{glycan_id}|{cuts}|u{missing}")
}

/// Methylatable positions of the piece as a free glycan, before cleavage scars.
fn standalone_sites<T: Scalar>(glycan: &GlycanStructure, members: &[usize], chem: &Chemistry<T>) -> Result<u32> {
    let mut sites = 1;
    for &n in members {
        let node = glycan.node(n);
        let free = chem.registry().get(&node.residue)?.methylation_sites_free;
        let kept_children = node.children.iter().filter(|c| members.binary_search(c).is_ok()).count() as u32;
        sites += free.saturating_sub(kept_children);
    }
    Ok(sites)
}

fn available_sites<T: Scalar>(glycan: &GlycanStructure, members: &[usize], cuts: usize, chem: &Chemistry<T>) -> Result<u32> {
    Ok(standalone_sites(glycan, members, chem)?.saturating_sub(cuts as u32))
}

fn piece_mass<T: Scalar>(
    glycan: &GlycanStructure,
    members: &[usize],
    cleavages: &[Cleavage],
    derivatization: DerivatizationState,
    chem: &Chemistry<T>,
) -> Result<T> {
    let mut mass = chem.water();
    for &n in members {
        mass += chem.residue_mass(&glycan.node(n).residue)?;
    }
    for c in cleavages {
        if c.kind.loses_water() {
            mass = mass - chem.water();
        }
    }
    if derivatization.is_permethylated() {
        let available = available_sites(glycan, members, cleavages.len(), chem)?;
        let methylated = available.checked_sub(derivatization.missing_methyls).ok_or(Error::TooManyMissingMethyls {
            missing: derivatization.missing_methyls,
            available,
        })?;
        mass += chem.methylene() * T::lit(f64::from(methylated));
    }
    Ok(mass)
}

/// Connected pieces of the precursor with 1..=max_new new boundary cuts.
/// Each entry: (sorted members, new cut edges where the piece is the
/// reducing side, whether the piece's top linkage is newly cut).
struct PieceSearch<'a> {
    glycan: &'a GlycanStructure,
    precursor_members: &'a [usize],
    max_new: u32,
    out: Vec<(Vec<usize>, Vec<usize>, bool)>,
    cap: usize,
}

impl PieceSearch<'_> {
    fn in_precursor(&self, n: usize) -> bool {
        self.precursor_members.binary_search(&n).is_ok()
    }

    fn grow(&mut self, pending: &mut Vec<usize>, members: &mut Vec<usize>, cuts: &mut Vec<usize>, top_cut: bool) -> bool {
        if self.out.len() > self.cap {
            return false;
        }
        let Some(edge) = pending.pop() else {
            let new = cuts.len() as u32 + u32::from(top_cut);
            if new >= 1 {
                let mut sorted = members.clone();
                sorted.sort_unstable();
                let mut c = cuts.clone();
                c.sort_unstable();
                self.out.push((sorted, c, top_cut));
            }
            return true;
        };
        // cut this linkage
        if (cuts.len() as u32) + u32::from(top_cut) < self.max_new {
            cuts.push(edge);
            if !self.grow(pending, members, cuts, top_cut) {
                return false;
            }
            cuts.pop();
        }
        // keep the child residue
        let before = pending.len();
        members.push(edge);
        pending.extend(self.glycan.node(edge).children.iter().copied().filter(|&c| self.in_precursor(c)));
        let ok = self.grow(pending, members, cuts, top_cut);
        pending.truncate(before);
        members.pop();
        pending.push(edge);
        ok
    }
}

/// Enumerates the glycosidic fragments of `precursor` allowed at `ms_level`.
pub fn enumerate_fragments<T: Scalar>(
    precursor: &Precursor<T>,
    settings: &FragmentationSettings,
    ms_level: u8,
    chem: &Chemistry<T>,
) -> Result<Vec<FragmentIon<T>>> {
    let level = settings.level(ms_level)?;
    if level.types.is_empty() || level.max_cleavages == 0 {
        return Ok(Vec::new());
    }
    let glycan = &*precursor.glycan;
    let mut search = PieceSearch {
        glycan,
        precursor_members: &precursor.members,
        max_new: level.max_cleavages,
        out: Vec::new(),
        cap: FRAGMENT_CAP,
    };
    let precursor_top = precursor.top();
    for &top in &precursor.members {
        let top_cut = top != precursor_top;
        if top_cut && level.max_cleavages == 0 {
            continue;
        }
        let mut pending: Vec<usize> =
            glycan.node(top).children.iter().copied().filter(|&c| search.in_precursor(c)).collect();
        pending.reverse();
        let mut members = vec![top];
        if !search.grow(&mut pending, &mut members, &mut Vec::new(), top_cut) {
            return Err(Error::FragmentCap { glycan: precursor.signature.clone(), cap: FRAGMENT_CAP });
        }
    }

    let non_reducing: Vec<FragmentType> = level.types.iter().copied().filter(|t| !t.keeps_reducing_side()).collect();
    let reducing: Vec<FragmentType> = level.types.iter().copied().filter(|t| t.keeps_reducing_side()).collect();

    let mut seen = HashSet::new();
    let mut fragments = Vec::new();
    for (members, new_below, top_cut) in search.out {
        let top = members[0];
        // inherited cleavages that still border this piece
        let inherited: Vec<Cleavage> = precursor
            .cleavages
            .iter()
            .copied()
            .filter(|c| {
                if c.kind.keeps_reducing_side() {
                    glycan.node(c.edge).parent.is_some_and(|p| members.binary_search(&p).is_ok())
                } else {
                    c.edge == top
                }
            })
            .collect();

        let mut slots: Vec<(usize, &[FragmentType])> = new_below.iter().map(|&e| (e, reducing.as_slice())).collect();
        if top_cut {
            slots.push((top, non_reducing.as_slice()));
        }
        if slots.iter().any(|(_, kinds)| kinds.is_empty()) {
            continue;
        }
        let new_count = slots.len() as u32;
        for choice in type_choices(&slots) {
            let mut cleavages: Vec<Cleavage> = inherited.iter().copied().chain(choice).collect();
            cleavages.sort_unstable();
            let max_missing = if precursor.derivatization.is_permethylated() {
                let available = available_sites(glycan, &members, cleavages.len(), chem)?;
                precursor.derivatization.missing_methyls.min(level.max_undermethylation).min(available)
            } else {
                0
            };
            for missing in 0..=max_missing {
                let derivatization = DerivatizationState { mode: precursor.derivatization.mode, missing_methyls: missing };
                let signature = signature(glycan.id(), &cleavages, missing);
                if !seen.insert(signature.clone()) {
                    continue;
                }
                let neutral_mass = piece_mass(glycan, &members, &cleavages, derivatization, chem)?;
                fragments.push(FragmentIon {
                    parent_id: precursor.signature.clone(),
                    glycan: Arc::clone(&precursor.glycan),
                    members: members.clone(),
                    cleavages: cleavages.clone(),
                    new_cleavages: new_count,
                    derivatization,
                    neutral_mass,
                    signature,
                });
                if fragments.len() > FRAGMENT_CAP {
                    return Err(Error::FragmentCap { glycan: precursor.signature.clone(), cap: FRAGMENT_CAP });
                }
            }
        }
    }
    fragments.sort_by(|a, b| {
        a.new_cleavages
            .cmp(&b.new_cleavages)
            .then_with(|| a.cleavages.cmp(&b.cleavages))
            .then_with(|| a.derivatization.missing_methyls.cmp(&b.derivatization.missing_methyls))
    });
    Ok(fragments)
}

fn type_choices(slots: &[(usize, &[FragmentType])]) -> Vec<Vec<Cleavage>> {
    let mut out = vec![Vec::new()];
    for (edge, kinds) in slots {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                kinds.iter().map(move |&kind| {
                    let mut next = prefix.clone();
                    next.push(Cleavage { edge: *edge, kind });
                    next
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glycan::{neutral_mass, ResidueRegistry};

    // Elemental oracle, independent of the element table.
    const C: f64 = 12.0;
    const H: f64 = 1.00782503207;
    const O: f64 = 15.99491461956;
    const HEX: f64 = 6.0 * C + 10.0 * H + 5.0 * O;
    const WATER: f64 = 2.0 * H + O;

    fn glycan(text: &str) -> Arc<GlycanStructure> {
        Arc::new(GlycanStructure::parse("G", text, &ResidueRegistry::default()).unwrap())
    }

    fn single(types: &[FragmentType]) -> FragmentationSettings {
        FragmentationSettings::uniform(3, LevelSettings::with_types(types, 1))
    }

    fn fragments(g: &Arc<GlycanStructure>, settings: &FragmentationSettings, deriv: DerivatizationState) -> Vec<FragmentIon<f64>> {
        let chem = Chemistry::<f64>::default();
        let p = Precursor::intact(Arc::clone(g), deriv, &chem).unwrap();
        enumerate_fragments(&p, settings, 2, &chem).unwrap()
    }

    #[test]
    fn dihexose_single_cleavage() {
        let g = glycan("Hex(1-4)Hex");
        let frags = fragments(&g, &single(&FragmentType::ALL), DerivatizationState::NATIVE);
        let got: BTreeMap<String, f64> = frags.iter().map(|f| (f.signature.clone(), f.neutral_mass)).collect();
        let expected = [("G|B1|u0", HEX), ("G|C1|u0", HEX + WATER), ("G|Y1|u0", HEX + WATER), ("G|Z1|u0", HEX)];
        assert_eq!(got.len(), 4);
        for (sig, mass) in expected {
            assert!((got[sig] - mass).abs() < 1e-9, "{sig}");
        }
        assert!((got["G|B1|u0"] - 162.0528).abs() < 5e-5);
        assert!((got["G|C1|u0"] - 180.0634).abs() < 5e-5);
        let m = 2.0 * HEX + WATER;
        assert!((got["G|B1|u0"] + got["G|Y1|u0"] - m).abs() < 1e-9);
        assert!((got["G|C1|u0"] + got["G|Z1|u0"] - m).abs() < 1e-9);
    }

    #[test]
    fn trisaccharide_count() {
        let g = glycan("Hex(1-4)Hex(1-4)Hex");
        assert_eq!(fragments(&g, &single(&FragmentType::ALL), DerivatizationState::NATIVE).len(), 8);
    }

    #[test]
    fn no_types_no_fragments() {
        let g = glycan("Hex(1-4)Hex(1-4)Hex");
        assert!(fragments(&g, &single(&[]), DerivatizationState::NATIVE).is_empty());
    }

    #[test]
    fn undefined_level() {
        let chem = Chemistry::<f64>::default();
        let p = Precursor::intact(glycan("Hex"), DerivatizationState::NATIVE, &chem).unwrap();
        assert!(matches!(enumerate_fragments(&p, &single(&FragmentType::ALL), 5, &chem), Err(Error::UndefinedLevel(5))));
    }

    #[test]
    fn internal_fragment_is_residue_sum() {
        let g = glycan("Hex(1-4)Hex(1-4)Hex");
        let settings = FragmentationSettings::uniform(2, LevelSettings::with_types(&[FragmentType::B, FragmentType::Y], 2));
        let frags = fragments(&g, &settings, DerivatizationState::NATIVE);
        let internal = frags.iter().find(|f| f.cleavages.len() == 2).unwrap();
        assert_eq!(internal.signature, "G|B1+Y2|u0");
        assert_eq!(internal.members, vec![1]);
        assert!((internal.neutral_mass - HEX).abs() < 1e-9);
    }

    #[test]
    fn y_of_dihexose_as_precursor_is_single_hexose() {
        let g = glycan("Hex(1-4)Hex");
        let frags = fragments(&g, &single(&FragmentType::ALL), DerivatizationState::NATIVE);
        let y = frags.iter().find(|f| f.signature == "G|Y1|u0").unwrap();
        let p = fragment_as_precursor(y);
        assert_eq!(p.members, vec![0]);
        assert!(y.has_reducing_end());
        assert_eq!(y.substructure().encoding(), "Hex");
    }

    #[test]
    fn non_reducing_two_residue_piece_of_trisaccharide() {
        let g = glycan("Hex(1-4)Hex(1-4)Hex");
        let frags = fragments(&g, &single(&FragmentType::ALL), DerivatizationState::NATIVE);
        // the B ion holding the two non-reducing residues cleaves linkage 1
        let b = frags.iter().find(|f| f.signature == "G|B1|u0").unwrap();
        assert_eq!(b.members, vec![1, 2]);
        assert!(!b.has_reducing_end());
        assert_eq!(b.substructure().encoding(), "Hex(1-4)Hex");
        assert!((b.neutral_mass - 2.0 * HEX).abs() < 1e-9);
    }

    #[test]
    fn refragmenting_a_y_fragment_matches_direct_enumeration() {
        let chem = Chemistry::<f64>::default();
        let g = glycan("Hex(1-4)Hex(1-4)Hex");
        let settings = single(&FragmentType::ALL);
        let level2 = fragments(&g, &settings, DerivatizationState::NATIVE);
        let y2 = level2.iter().find(|f| f.signature == "G|Y2|u0").unwrap();
        let again = enumerate_fragments(&fragment_as_precursor(y2), &settings, 3, &chem).unwrap();

        let direct = fragments(&glycan("Hex(1-4)Hex"), &settings, DerivatizationState::NATIVE);
        let mut a: Vec<f64> = again.iter().map(|f| f.neutral_mass).collect();
        let mut b: Vec<f64> = direct.iter().map(|f| f.neutral_mass).collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9);
        }
        // fragments of the Y piece stay in the original glycan's coordinates
        let sigs: Vec<&str> = again.iter().map(|f| f.signature.as_str()).collect();
        assert!(sigs.contains(&"G|B1+Y2|u0"));
        assert!(sigs.contains(&"G|Y1|u0"));
    }

    #[test]
    fn permethylated_complementarity_and_known_ions() {
        let chem = Chemistry::<f64>::default();
        let g = glycan("Hex(1-3)[Hex(1-6)]Hex(1-4)HexNAc(1-4)HexNAc");
        let deriv = DerivatizationState::permethylated(0);
        let m = neutral_mass(&*g, deriv, &chem).unwrap();
        let frags = fragments(&g, &single(&FragmentType::ALL), deriv);
        for edge in 1..g.len() {
            let get = |k: char| frags.iter().find(|f| f.signature == format!("G|{k}{edge}|u0")).unwrap().neutral_mass;
            assert!((get('B') + get('Y') - m).abs() < 1e-9);
            assert!((get('C') + get('Z') - m).abs() < 1e-9);
        }
        // terminal permethylated hexose oxonium ion, protonated: m/z 219.1227
        let b_terminal = frags.iter().find(|f| f.signature == "G|B3|u0").unwrap();
        assert!((b_terminal.neutral_mass + 1.00727646677 - 219.1227).abs() < 1e-3);
    }

    #[test]
    fn undermethylated_fragments_follow_precursor() {
        let chem = Chemistry::<f64>::default();
        let g = glycan("Hex(1-4)Hex");
        let mut settings = single(&FragmentType::ALL);
        settings.set(2, LevelSettings { max_undermethylation: 1, ..LevelSettings::with_types(&FragmentType::ALL, 1) });
        let full = fragments(&g, &settings, DerivatizationState::permethylated(0));
        assert!(full.iter().all(|f| f.derivatization.missing_methyls == 0));
        let p = Precursor::intact(Arc::clone(&g), DerivatizationState::permethylated(1), &chem).unwrap();
        let under = enumerate_fragments(&p, &settings, 2, &chem).unwrap();
        assert_eq!(under.len(), 8);
        let y0 = under.iter().find(|f| f.signature == "G|Y1|u0").unwrap();
        let y1 = under.iter().find(|f| f.signature == "G|Y1|u1").unwrap();
        assert!((y0.neutral_mass - y1.neutral_mass - (C + 2.0 * H)).abs() < 1e-9);
    }

    #[test]
    fn combinatorial_cap() {
        // a full binary tree of depth six explodes past the cap
        fn tree(depth: u32) -> String {
            if depth == 0 {
                "Hex".into()
            } else {
                let sub = tree(depth - 1);
                format!("{sub}(1-3)[{sub}(1-6)]Hex")
            }
        }
        let text = tree(6);
        let g = glycan(&text);
        let chem = Chemistry::<f64>::default();
        let p = Precursor::intact(g, DerivatizationState::NATIVE, &chem).unwrap();
        let settings = FragmentationSettings::uniform(2, LevelSettings::with_types(&FragmentType::ALL, 4));
        assert!(matches!(enumerate_fragments(&p, &settings, 2, &chem), Err(Error::FragmentCap { .. })));
    }
}
