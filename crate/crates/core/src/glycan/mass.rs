use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::elements::{ElementMassTable, Formula};
use super::residue::ResidueRegistry;
use super::structure::GlycanStructure;

/// Residue counts, independent of topology.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Composition {
    pub counts: BTreeMap<String, u32>,
}

impl Composition {
    pub fn total(&self) -> u32 {
        self.counts.values().sum()
    }

    pub fn count(&self, code: &str) -> u32 {
        self.counts.get(code).copied().unwrap_or(0)
    }

    pub fn add(&mut self, code: &str, n: u32) {
        *self.counts.entry(code.to_string()).or_insert(0) += n;
    }
}

impl fmt::Display for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (code, n) in &self.counts {
            write!(f, "{code}{n}")?;
        }
        Ok(())
    }
}

impl<const N: usize> From<[(&str, u32); N]> for Composition {
    fn from(items: [(&str, u32); N]) -> Self {
        let mut c = Composition::default();
        for (code, n) in items {
            c.add(code, n);
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Derivatization {
    Native,
    Permethylated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DerivatizationState {
    pub mode: Derivatization,
    /// Methylation sites left unmethylated; always 0 for native glycans.
    pub missing_methyls: u32,
}

impl DerivatizationState {
    pub const NATIVE: Self = Self { mode: Derivatization::Native, missing_methyls: 0 };

    pub fn permethylated(missing_methyls: u32) -> Self {
        Self { mode: Derivatization::Permethylated, missing_methyls }
    }

    pub fn is_permethylated(&self) -> bool {
        self.mode == Derivatization::Permethylated
    }
}

/// Element table plus residue registry, with residue masses derived once.
#[derive(Debug, Clone)]
pub struct Chemistry<T: Scalar = f64> {
    elements: ElementMassTable<T>,
    registry: ResidueRegistry,
    residue_masses: HashMap<String, T>,
    water: T,
    methylene: T,
}

impl<T: Scalar> Chemistry<T> {
    pub fn new(elements: ElementMassTable<T>, registry: ResidueRegistry) -> Result<Self> {
        let residue_masses = registry
            .kinds()
            .map(|k| Ok((k.code.clone(), elements.formula_mass(&k.base_composition)?)))
            .collect::<Result<HashMap<_, _>>>()?;
        let water = elements.formula_mass(&"H2O".parse()?)?;
        let methylene = elements.formula_mass(&"CH2".parse()?)?;
        Ok(Self { elements, registry, residue_masses, water, methylene })
    }

    pub fn elements(&self) -> &ElementMassTable<T> {
        &self.elements
    }

    pub fn registry(&self) -> &ResidueRegistry {
        &self.registry
    }

    pub fn residue_mass(&self, code: &str) -> Result<T> {
        self.residue_masses
            .get(code)
            .copied()
            .ok_or_else(|| Error::UnknownResidue(code.to_string()))
    }

    pub fn water(&self) -> T {
        self.water
    }

    /// Mass of one CH2, the increment per methylated site.
    pub fn methylene(&self) -> T {
        self.methylene
    }

    pub fn formula_mass(&self, formula: &Formula) -> Result<T> {
        self.elements.formula_mass(formula)
    }

    /// Mass of `formula` given as text, e.g. `H2O`.
    pub fn formula_text_mass(&self, formula: &str) -> Result<T> {
        self.formula_mass(&formula.parse()?)
    }
}

impl<T: Scalar> Default for Chemistry<T> {
    fn default() -> Self {
        Self::new(ElementMassTable::default(), ResidueRegistry::default()).expect("shipped chemistry is valid")
    }
}

/// Anything with a residue composition and a methylation site count.
pub trait MassSource {
    fn composition(&self) -> Composition;

    fn methylation_sites(&self, registry: &ResidueRegistry) -> Result<u32>;
}

impl MassSource for GlycanStructure {
    fn composition(&self) -> Composition {
        composition_of(self)
    }

    /// Each residue keeps `free - children` sites (floored at 0); the
    /// reducing-end root gains one for its anomeric hydroxyl.
    fn methylation_sites(&self, registry: &ResidueRegistry) -> Result<u32> {
        let mut sites = 1;
        for node in self.nodes() {
            let free = registry.get(&node.residue)?.methylation_sites_free;
            sites += free.saturating_sub(node.children.len() as u32);
        }
        Ok(sites)
    }
}

impl MassSource for Composition {
    fn composition(&self) -> Composition {
        self.clone()
    }

    /// Topology-free count: any tree of n residues has n - 1 linkages.
    fn methylation_sites(&self, registry: &ResidueRegistry) -> Result<u32> {
        let mut free = 0u32;
        for (code, n) in &self.counts {
            free += registry.get(code)?.methylation_sites_free * n;
        }
        let n = self.total();
        Ok((free + 1).saturating_sub(n.saturating_sub(1)))
    }
}

pub fn composition_of(structure: &GlycanStructure) -> Composition {
    let mut c = Composition::default();
    for node in structure.nodes() {
        c.add(&node.residue, 1);
    }
    c
}

/// Sum of residue masses plus one water, plus CH2 per methylated site.
pub fn neutral_mass<T: Scalar>(
    source: &impl MassSource,
    derivatization: DerivatizationState,
    chem: &Chemistry<T>,
) -> Result<T> {
    let composition = source.composition();
    if composition.total() == 0 {
        return Err(Error::EmptyComposition);
    }
    let mut mass = chem.water();
    for (code, n) in &composition.counts {
        mass += chem.residue_mass(code)? * T::lit(f64::from(*n));
    }
    if derivatization.is_permethylated() {
        let available = source.methylation_sites(chem.registry())?;
        let methylated = available.checked_sub(derivatization.missing_methyls).ok_or(
            Error::TooManyMissingMethyls { missing: derivatization.missing_methyls, available },
        )?;
        mass += chem.methylene() * T::lit(f64::from(methylated));
    }
    Ok(mass)
}

/// Permethylated states with 0..=max_missing missing methyls (capped at the
/// site count) and their mass shifts relative to full methylation.
pub fn undermethylation_variants<T: Scalar>(
    structure: &GlycanStructure,
    max_missing: u32,
    chem: &Chemistry<T>,
) -> Result<Vec<(DerivatizationState, T)>> {
    let sites = structure.methylation_sites(chem.registry())?;
    Ok((0..=max_missing.min(sites))
        .map(|k| (DerivatizationState::permethylated(k), -chem.methylene() * T::lit(f64::from(k))))
        .collect())
}
