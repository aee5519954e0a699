//! Charge carriers, neutral exchanges and neutral losses, the mapping from
//! neutral mass to m/z, and tolerance matching.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::{parse_scalar, Scalar};

fn validate_name(name: &str) -> Result<()> {
    if name.is_empty() || name.chars().any(|c| c.is_whitespace() || ",;/*>:|@".contains(c)) {
        return Err(Error::Config(format!("species name `{name}` is empty or contains a reserved character")));
    }
    Ok(())
}

/// Charged species attached to the neutral molecule; `mass_delta` is the ion
/// mass (electrons already accounted for).
#[derive(Debug, Clone, PartialEq)]
pub struct ChargeCarrier<T: Scalar = f64> {
    pub name: String,
    pub mass_delta: T,
    pub charge: i32,
}

impl<T: Scalar> ChargeCarrier<T> {
    pub fn new(name: impl Into<String>, charge: i32, mass_delta: T) -> Result<Self> {
        let name = name.into();
        validate_name(&name)?;
        if charge == 0 {
            return Err(Error::ZeroCharge);
        }
        Ok(Self { name, mass_delta, charge })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Species<T: Scalar = f64> {
    pub name: String,
    pub mass: T,
}

impl<T: Scalar> Species<T> {
    pub fn new(name: impl Into<String>, mass: T) -> Result<Self> {
        let name = name.into();
        validate_name(&name)?;
        Ok(Self { name, mass })
    }
}

/// Replacement of `count` copies of one neutral-equivalent species by another
/// (H by Na, say). Net charge is unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct NeutralExchange<T: Scalar = f64> {
    pub out_species: Species<T>,
    pub in_species: Species<T>,
    pub count: u32,
}

impl<T: Scalar> NeutralExchange<T> {
    pub fn shift(&self) -> T {
        (self.in_species.mass - self.out_species.mass) * T::lit(f64::from(self.count))
    }

    fn label(&self) -> String {
        format!("{}>{}", self.out_species.name, self.in_species.name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeutralLoss<T: Scalar = f64> {
    pub name: String,
    pub mass: T,
    pub max_count: u32,
}

impl<T: Scalar> NeutralLoss<T> {
    pub fn new(name: impl Into<String>, mass: T, max_count: u32) -> Result<Self> {
        let name = name.into();
        validate_name(&name)?;
        if !(mass > T::zero()) {
            return Err(Error::Config(format!("neutral loss {name} must have positive mass")));
        }
        Ok(Self { name, mass, max_count })
    }
}

/// One way of turning a neutral mass into an observed ion.
#[derive(Debug, Clone, PartialEq)]
pub struct IonConfiguration<T: Scalar = f64> {
    /// Carrier multiset as (carrier, multiplicity); zero multiplicities are dropped.
    pub carriers: Vec<(ChargeCarrier<T>, u32)>,
    pub exchanges: Vec<NeutralExchange<T>>,
    pub losses: Vec<(NeutralLoss<T>, u32)>,
}

impl<T: Scalar> IonConfiguration<T> {
    pub fn new(
        carriers: Vec<(ChargeCarrier<T>, u32)>,
        exchanges: Vec<NeutralExchange<T>>,
        losses: Vec<(NeutralLoss<T>, u32)>,
    ) -> Result<Self> {
        let carriers: Vec<_> = carriers.into_iter().filter(|(_, n)| *n > 0).collect();
        let positive = carriers.iter().any(|(c, _)| c.charge > 0);
        let negative = carriers.iter().any(|(c, _)| c.charge < 0);
        if positive && negative {
            return Err(Error::MixedPolarity);
        }
        let config = Self {
            carriers,
            exchanges: exchanges.into_iter().filter(|e| e.count > 0).collect(),
            losses: losses.into_iter().filter(|(_, n)| *n > 0).collect(),
        };
        if config.charge() == 0 {
            return Err(Error::ZeroCharge);
        }
        Ok(config)
    }

    /// Single carrier of multiplicity `count`, no exchanges or losses.
    pub fn simple(carrier: ChargeCarrier<T>, count: u32) -> Result<Self> {
        Self::new(vec![(carrier, count)], Vec::new(), Vec::new())
    }

    pub fn charge(&self) -> i32 {
        self.carriers.iter().map(|(c, n)| c.charge * *n as i32).sum()
    }

    pub fn abs_charge(&self) -> u32 {
        self.charge().unsigned_abs()
    }

    pub fn has_losses(&self) -> bool {
        !self.losses.is_empty()
    }

    /// Mass added to the neutral molecule before dividing by |z|.
    pub fn mass_shift(&self) -> T {
        let carriers: T = self.carriers.iter().map(|(c, n)| c.mass_delta * T::lit(f64::from(*n))).sum();
        let exchanges: T = self.exchanges.iter().map(NeutralExchange::shift).sum();
        let losses: T = self.losses.iter().map(|(l, n)| l.mass * T::lit(f64::from(*n))).sum();
        carriers + exchanges - losses
    }

    /// Compact text key, e.g. `H+*1,Na+*1/xch:H>Na*1/loss:H2O*1`.
    pub fn signature(&self) -> String {
        let mut out = self
            .carriers
            .iter()
            .map(|(c, n)| format!("{}*{}", c.name, n))
            .collect::<Vec<_>>()
            .join(",");
        if !self.exchanges.is_empty() {
            out.push_str("/xch:");
            out.push_str(
                &self.exchanges.iter().map(|e| format!("{}*{}", e.label(), e.count)).collect::<Vec<_>>().join(","),
            );
        }
        if !self.losses.is_empty() {
            out.push_str("/loss:");
            out.push_str(&self.losses.iter().map(|(l, n)| format!("{}*{}", l.name, n)).collect::<Vec<_>>().join(","));
        }
        out
    }
}

impl<T: Scalar> fmt::Display for IonConfiguration<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.signature())
    }
}

/// m/z = (M + carriers + exchange shifts - losses) / |z|.
pub fn mz<T: Scalar>(neutral_mass: T, config: &IonConfiguration<T>) -> Result<T> {
    let z = config.abs_charge();
    if z == 0 {
        return Err(Error::ZeroCharge);
    }
    Ok((neutral_mass + config.mass_shift()) / T::lit(f64::from(z)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToleranceUnit {
    Da,
    Ppm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MzTolerance<T: Scalar = f64> {
    pub value: T,
    pub unit: ToleranceUnit,
}

impl<T: Scalar> MzTolerance<T> {
    pub fn new(value: T, unit: ToleranceUnit) -> Result<Self> {
        if !(value > T::zero()) || !value.is_finite() {
            return Err(Error::Config(format!("tolerance must be positive, got {value}")));
        }
        Ok(Self { value, unit })
    }

    pub fn da(value: T) -> Result<Self> {
        Self::new(value, ToleranceUnit::Da)
    }

    pub fn ppm(value: T) -> Result<Self> {
        Self::new(value, ToleranceUnit::Ppm)
    }

    /// Half-width of the window around a theoretical value.
    pub fn half_width(&self, theoretical: T) -> T {
        match self.unit {
            ToleranceUnit::Da => self.value,
            ToleranceUnit::Ppm => theoretical.abs() * self.value * T::lit(1e-6),
        }
    }

    /// Loose [lo, hi] bounds for observed values that might match a
    /// theoretical value in `[theo_lo, theo_hi]`; used to prefilter sorted lists.
    pub fn search_bounds(&self, theo_lo: T, theo_hi: T) -> (T, T) {
        let pad = self.half_width(theo_hi.abs().max(theo_lo.abs()));
        (theo_lo - pad, theo_hi + pad)
    }
}

impl<T: Scalar> fmt::Display for MzTolerance<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.unit {
            ToleranceUnit::Da => write!(f, "{} Da", self.value),
            ToleranceUnit::Ppm => write!(f, "{} ppm", self.value),
        }
    }
}

impl<T: Scalar> FromStr for MzTolerance<T> {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut parts = text.split_whitespace();
        let (Some(value), Some(unit), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Config(format!("tolerance `{text}` must be `<value> Da|ppm`")));
        };
        let value = parse_scalar::<T>(value).ok_or_else(|| Error::Config(format!("bad tolerance value `{value}`")))?;
        let unit = match unit.to_ascii_lowercase().as_str() {
            "da" => ToleranceUnit::Da,
            "ppm" => ToleranceUnit::Ppm,
            other => return Err(Error::Config(format!("unknown tolerance unit `{other}`"))),
        };
        Self::new(value, unit)
    }
}

/// Da windows are symmetric; ppm windows are anchored on the theoretical value.
pub fn matches<T: Scalar>(observed: T, theoretical: T, tol: &MzTolerance<T>) -> bool {
    (observed - theoretical).abs() <= tol.half_width(theoretical)
}

/// Kinds of exchange available for enumeration (counts decided there).
#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeKind<T: Scalar = f64> {
    pub out_species: Species<T>,
    pub in_species: Species<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IonSettings<T: Scalar = f64> {
    pub max_charge: u32,
    pub carriers: Vec<ChargeCarrier<T>>,
    pub exchanges: Vec<ExchangeKind<T>>,
    pub max_exchanges: u32,
    pub losses: Vec<NeutralLoss<T>>,
}

/// All count vectors over `bounds.len()` slots with per-slot caps `bounds` and
/// total in `min_total..=max_total`, ordered by total, then descending lexicographic.
fn count_vectors(bounds: &[u32], min_total: u32, max_total: u32) -> Vec<Vec<u32>> {
    fn rec(bounds: &[u32], remaining: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == bounds.len() {
            out.push(prefix.clone());
            return;
        }
        let cap = bounds[prefix.len()].min(remaining);
        for n in (0..=cap).rev() {
            prefix.push(n);
            rec(bounds, remaining - n, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(bounds, max_total, &mut Vec::new(), &mut out);
    out.retain(|v| {
        let t: u32 = v.iter().sum();
        t >= min_total && t <= max_total
    });
    out.sort_by(|a, b| a.iter().sum::<u32>().cmp(&b.iter().sum::<u32>()).then_with(|| b.cmp(a)));
    out
}

/// Every carrier multiset with 1 <= |z| <= max_charge, crossed with every
/// exchange multiset of size 0..=max_exchanges and every loss count vector.
/// Ordered by |z|, then carriers, then exchanges, then losses.
pub fn enumerate_ion_configurations<T: Scalar>(settings: &IonSettings<T>) -> Result<Vec<IonConfiguration<T>>> {
    if settings.carriers.is_empty() {
        return Err(Error::EmptyCarrierSet);
    }
    if settings.max_charge == 0 {
        return Err(Error::Config("max_charge must be at least 1".into()));
    }
    let positive = settings.carriers.iter().any(|c| c.charge > 0);
    let negative = settings.carriers.iter().any(|c| c.charge < 0);
    if positive && negative {
        return Err(Error::MixedPolarity);
    }

    let carrier_bounds: Vec<u32> =
        settings.carriers.iter().map(|c| settings.max_charge / c.charge.unsigned_abs()).collect();
    let mut carrier_sets: Vec<(u32, Vec<u32>)> = count_vectors(&carrier_bounds, 1, settings.max_charge)
        .into_iter()
        .map(|v| {
            let z: u32 = v.iter().zip(&settings.carriers).map(|(n, c)| n * c.charge.unsigned_abs()).sum();
            (z, v)
        })
        .filter(|(z, _)| *z >= 1 && *z <= settings.max_charge)
        .collect();
    carrier_sets.sort_by(|(za, va), (zb, vb)| za.cmp(zb).then_with(|| vb.cmp(va)));

    let exchange_sets = count_vectors(
        &vec![settings.max_exchanges; settings.exchanges.len()],
        0,
        settings.max_exchanges,
    );
    let loss_sets = count_vectors(
        &settings.losses.iter().map(|l| l.max_count).collect::<Vec<_>>(),
        0,
        settings.losses.iter().map(|l| l.max_count).sum(),
    );

    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (_, carriers) in &carrier_sets {
        for exchanges in &exchange_sets {
            for losses in &loss_sets {
                let config = IonConfiguration::new(
                    settings.carriers.iter().cloned().zip(carriers.iter().copied()).collect(),
                    settings
                        .exchanges
                        .iter()
                        .zip(exchanges)
                        .map(|(k, &count)| NeutralExchange {
                            out_species: k.out_species.clone(),
                            in_species: k.in_species.clone(),
                            count,
                        })
                        .collect(),
                    settings.losses.iter().cloned().zip(losses.iter().copied()).collect(),
                )?;
                if seen.insert(config.signature()) {
                    out.push(config);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const NA_ION: f64 = 22.98922070;
    const H_ION: f64 = 1.00727646677;

    fn na() -> ChargeCarrier<f64> {
        ChargeCarrier::new("Na+", 1, NA_ION).unwrap()
    }

    fn h() -> ChargeCarrier<f64> {
        ChargeCarrier::new("H+", 1, H_ION).unwrap()
    }

    fn h_to_na() -> ExchangeKind<f64> {
        ExchangeKind {
            out_species: Species::new("H", 1.00782503207).unwrap(),
            in_species: Species::new("Na", 22.9897692809).unwrap(),
        }
    }

    fn settings(max_charge: u32, carriers: Vec<ChargeCarrier<f64>>, max_exchanges: u32, losses: Vec<NeutralLoss<f64>>) -> IonSettings<f64> {
        IonSettings { max_charge, carriers, exchanges: vec![h_to_na()], max_exchanges, losses }
    }

    #[test]
    fn sodium_adducts() {
        let one = IonConfiguration::simple(na(), 1).unwrap();
        assert!((mz(342.1162, &one).unwrap() - 365.1054).abs() < 1e-4);
        let two = IonConfiguration::simple(na(), 2).unwrap();
        assert!((mz(342.1162, &two).unwrap() - (342.1162 + 2.0 * NA_ION) / 2.0).abs() < 1e-12);
        assert!((mz(342.1162, &two).unwrap() - 194.0473).abs() < 1e-4);
    }

    #[test]
    fn zero_charge_is_rejected() {
        assert!(matches!(IonConfiguration::<f64>::new(vec![], vec![], vec![]), Err(Error::ZeroCharge)));
        assert!(matches!(ChargeCarrier::new("X", 0, 1.0), Err(Error::ZeroCharge)));
        let neg = ChargeCarrier::new("Cl-", -1, 34.96940).unwrap();
        assert!(matches!(IonConfiguration::new(vec![(na(), 1), (neg, 1)], vec![], vec![]), Err(Error::MixedPolarity)));
    }

    #[test]
    fn charge_scaling() {
        let m = 1234.5678;
        for z in 1..=5u32 {
            let config = IonConfiguration::simple(na(), z).unwrap();
            let expected = (m + f64::from(z) * NA_ION) / f64::from(z);
            assert!((mz(m, &config).unwrap() - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn exchange_shift_is_sodium_minus_hydrogen() {
        let m = 900.0;
        for z in 1..=3u32 {
            let base = IonConfiguration::simple(na(), z).unwrap();
            let mut exchanged = base.clone();
            exchanged.exchanges.push(NeutralExchange { out_species: h_to_na().out_species, in_species: h_to_na().in_species, count: 1 });
            let shift = mz(m, &exchanged).unwrap() - mz(m, &base).unwrap();
            assert!((shift - 21.98194 / f64::from(z)).abs() < 1e-5);
        }
    }

    #[test]
    fn tolerance_matching() {
        let da = |v| MzTolerance::da(v).unwrap();
        let ppm = |v| MzTolerance::ppm(v).unwrap();
        assert!(matches(365.1054, 365.1054, &da(0.01)));
        assert!(!matches(365.1154, 365.1054, &da(0.005)));
        // 0.0004 / 365.1054 * 1e6 = 1.0956 ppm
        let offset_ppm: f64 = (365.1058 - 365.1054) / 365.1054 * 1e6;
        assert!((offset_ppm - 1.0956).abs() < 1e-3);
        assert!(matches(365.1058, 365.1054, &ppm(2.0)));
        assert!(matches(365.1058, 365.1054, &ppm(5.0)));
        assert!(!matches(365.1058, 365.1054, &ppm(1.0)));
    }

    #[test]
    fn tolerance_parsing() {
        assert_eq!("10 ppm".parse::<MzTolerance<f64>>().unwrap(), MzTolerance::ppm(10.0).unwrap());
        assert_eq!("0.5 Da".parse::<MzTolerance<f64>>().unwrap(), MzTolerance::da(0.5).unwrap());
        assert!("0 Da".parse::<MzTolerance<f64>>().is_err());
        assert!("-1 Da".parse::<MzTolerance<f64>>().is_err());
        assert!("1 mDa".parse::<MzTolerance<f64>>().is_err());
    }

    #[test]
    fn enumeration_counts() {
        let one = enumerate_ion_configurations(&settings(1, vec![h()], 0, vec![])).unwrap();
        assert_eq!(one.len(), 1);

        // multisets of size 1 and 2 over {H+, Na+}: 2 + 3
        let five = enumerate_ion_configurations(&settings(2, vec![h(), na()], 0, vec![])).unwrap();
        assert_eq!(five.len(), 5);
        let zs: Vec<u32> = five.iter().map(IonConfiguration::abs_charge).collect();
        assert_eq!(zs, vec![1, 1, 2, 2, 2]);

        let water = NeutralLoss::new("H2O", 18.010564684, 1).unwrap();
        let six = enumerate_ion_configurations(&settings(1, vec![h()], 2, vec![water])).unwrap();
        assert_eq!(six.len(), 6);
    }

    #[test]
    fn enumeration_is_stable_and_duplicate_free() {
        let water = NeutralLoss::new("H2O", 18.010564684, 1).unwrap();
        let meoh = NeutralLoss::new("MeOH", 32.026214748, 1).unwrap();
        let s = settings(3, vec![h(), na()], 2, vec![water, meoh]);
        let a = enumerate_ion_configurations(&s).unwrap();
        let b = enumerate_ion_configurations(&s).unwrap();
        assert_eq!(a, b);
        let mut sigs: Vec<_> = a.iter().map(IonConfiguration::signature).collect();
        let n = sigs.len();
        sigs.sort();
        sigs.dedup();
        assert_eq!(sigs.len(), n);
        // 9 carrier multisets x 3 exchange counts x 4 loss vectors
        assert_eq!(n, 9 * 3 * 4);
        assert!(a.windows(2).all(|w| w[0].abs_charge() <= w[1].abs_charge()));
    }

    #[test]
    fn enumeration_errors() {
        assert!(matches!(enumerate_ion_configurations(&settings(1, vec![], 0, vec![])), Err(Error::EmptyCarrierSet)));
        let neg = ChargeCarrier::new("Cl-", -1, 34.96940).unwrap();
        assert!(matches!(enumerate_ion_configurations(&settings(1, vec![h(), neg], 0, vec![])), Err(Error::MixedPolarity)));
    }

    #[test]
    fn signature_format() {
        let water = NeutralLoss::new("H2O", 18.010564684, 1).unwrap();
        let config = IonConfiguration::new(
            vec![(h(), 1), (na(), 1)],
            vec![NeutralExchange { out_species: h_to_na().out_species, in_species: h_to_na().in_species, count: 1 }],
            vec![(water, 1)],
        )
        .unwrap();
        assert_eq!(config.signature(), "H+*1,Na+*1/xch:H>Na*1/loss:H2O*1");
    }
}
