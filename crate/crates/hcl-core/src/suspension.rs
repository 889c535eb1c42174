//! Suspension flows over the subshift with locally constant roof functions:
//! the measure correspondence rescales base exponents by the mean roof and
//! inserts one zero exponent in the flow direction.

use crate::cocycle::{CocycleError, LinearCocycle, OrbitCocycle};
use crate::domination::{unstable_signature, Signature};
use crate::measures::MeasureSpec;
use crate::sft::PeriodicWord;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum SuspensionError {
    #[error("roof value for symbol {0} must be positive, got {1}")]
    NonPositiveRoof(u8, f64),
    #[error("roof defined for {got} symbols, system has {expected}")]
    AlphabetMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Cocycle(#[from] CocycleError),
}

/// Positive roof value per symbol, bounded away from zero.
#[derive(Debug, Clone, PartialEq)]
pub struct RoofFunction {
    values: Vec<f64>,
}

impl RoofFunction {
    pub fn new(values: Vec<f64>) -> Result<Self, SuspensionError> {
        for (i, &v) in values.iter().enumerate() {
            if !(v > 0.0) {
                return Err(SuspensionError::NonPositiveRoof(i as u8, v));
            }
        }
        Ok(RoofFunction { values })
    }

    pub fn constant(alphabet_size: usize, h: f64) -> Result<Self, SuspensionError> {
        Self::new(vec![h; alphabet_size])
    }

    pub fn value(&self, symbol: u8) -> f64 {
        self.values[symbol as usize]
    }

    pub fn alphabet_size(&self) -> usize {
        self.values.len()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::MAX, f64::min)
    }
}

/// Mean roof over the measure: orbit average for periodic measures, the
/// stationary average for Markov measures.
pub fn roof_integral(roof: &RoofFunction, measure: &MeasureSpec) -> Result<f64, SuspensionError> {
    match measure {
        MeasureSpec::Periodic(w) => {
            for &s in w.symbols() {
                if s as usize >= roof.alphabet_size() {
                    return Err(SuspensionError::AlphabetMismatch {
                        expected: s as usize + 1,
                        got: roof.alphabet_size(),
                    });
                }
            }
            let sum: f64 = w.symbols().iter().map(|&s| roof.value(s)).sum();
            Ok(sum / w.period() as f64)
        }
        MeasureSpec::Markov(m) => {
            if m.alphabet_size() != roof.alphabet_size() {
                return Err(SuspensionError::AlphabetMismatch {
                    expected: m.alphabet_size(),
                    got: roof.alphabet_size(),
                });
            }
            Ok(m.stationary
                .iter()
                .enumerate()
                .map(|(a, &pi)| pi * roof.value(a as u8))
                .sum())
        }
    }
}

/// Flow-time Lyapunov spectrum: base exponents divided by the mean roof,
/// with one zero inserted for the flow direction. `zero_index` marks the
/// inserted entry.
#[derive(Debug, Clone, Serialize)]
pub struct FlowSpectrum {
    pub exponents: Vec<f64>,
    pub zero_index: usize,
    pub normalization: f64,
}

impl FlowSpectrum {
    /// Base exponents recovered by removing the flow zero and multiplying
    /// back by the normalization.
    pub fn to_base(&self) -> Vec<f64> {
        self.exponents
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != self.zero_index)
            .map(|(_, &e)| e * self.normalization)
            .collect()
    }
}

/// Rescale a base spectrum (ascending) by the mean roof and insert the flow
/// zero in sorted position.
pub fn suspend_spectrum(
    base_exponents: &[f64],
    roof: &RoofFunction,
    measure: &MeasureSpec,
) -> Result<FlowSpectrum, SuspensionError> {
    let h = roof_integral(roof, measure)?;
    let scaled: Vec<f64> = base_exponents.iter().map(|e| e / h).collect();
    let zero_index = scaled.iter().take_while(|&&e| e < 0.0).count();
    let mut exponents = scaled;
    exponents.insert(zero_index, 0.0);
    Ok(FlowSpectrum {
        exponents,
        zero_index,
        normalization: h,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrespondenceRow {
    pub orbit: PeriodicWord,
    pub roof_integral: f64,
    pub signature: Signature,
    pub simple_base: bool,
    pub base_exponents: Vec<f64>,
    pub flow_exponents: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrespondenceReport {
    pub rows: Vec<CorrespondenceRow>,
    pub violations: Vec<String>,
}

/// Verify, orbit by orbit, that suspension preserves signatures, simplicity
/// flags, and the sign pattern of nonzero exponents, and that the rescaling
/// is exact: `flow_exponent * roof_integral == base_exponent` within 1e-10.
pub fn flow_signature_correspondence(
    cocycle: &LinearCocycle,
    orbits: &[PeriodicWord],
    roof: &RoofFunction,
) -> Result<CorrespondenceReport, SuspensionError> {
    let mut rows = vec![];
    let mut violations = vec![];
    for word in orbits {
        let oc = OrbitCocycle::new(cocycle, word)?;
        let base = oc.lyapunov_exponents()?;
        let measure = MeasureSpec::Periodic(word.clone());
        let flow = suspend_spectrum(&base, roof, &measure)?;
        let h = flow.normalization;
        let signature = unstable_signature(&oc)?;
        let simple_base = oc.has_simple_spectrum();

        let restored = flow.to_base();
        for (i, (&b, &r)) in base.iter().zip(restored.iter()).enumerate() {
            if (b - r).abs() > 1e-10 {
                violations.push(format!(
                    "orbit {word}: component {i} restores to {r}, base {b}"
                ));
            }
        }
        let zeros = flow.exponents.iter().filter(|&&e| e == 0.0).count();
        if zeros != 1 {
            violations.push(format!("orbit {word}: {zeros} zero exponents in the flow spectrum"));
        }
        // sign pattern of nonzero flow exponents matches the base pattern
        let base_signs: Vec<i8> = base.iter().map(|e| e.signum() as i8).collect();
        let flow_signs: Vec<i8> = flow
            .exponents
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != flow.zero_index)
            .map(|(_, e)| e.signum() as i8)
            .collect();
        if base_signs != flow_signs {
            violations.push(format!("orbit {word}: sign pattern changed under suspension"));
        }
        // adjacent gaps scale uniformly by 1/h
        for pair in base.windows(2).zip(restored.windows(2)) {
            let (bg, rg) = (pair.0[1] - pair.0[0], pair.1[1] - pair.1[0]);
            if (bg - rg).abs() > 1e-9 {
                violations.push(format!("orbit {word}: gap rescaling inconsistent"));
            }
        }
        rows.push(CorrespondenceRow {
            orbit: word.clone(),
            roof_integral: h,
            signature,
            simple_base,
            base_exponents: base,
            flow_exponents: flow.exponents,
        });
    }
    Ok(CorrespondenceReport { rows, violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SmallMat;
    use crate::sft::{MarkovMeasure, SftSystem};

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn roof_integral_examples() {
        let sft = SftSystem::golden_mean();
        let roof = RoofFunction::new(vec![1.0, 2.0]).unwrap();
        // constant roof
        let one = RoofFunction::constant(2, 1.0).unwrap();
        let w = PeriodicWord::new(&sft, &[0, 0, 1]).unwrap();
        assert_close(
            roof_integral(&one, &MeasureSpec::Periodic(w.clone())).unwrap(),
            1.0,
            1e-15,
        );
        // periodic word "001": (1 + 1 + 2) / 3
        assert_close(
            roof_integral(&roof, &MeasureSpec::Periodic(w)).unwrap(),
            4.0 / 3.0,
            1e-15,
        );
        // Parry measure: pi_0 + 2 pi_1
        let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
        let m = MarkovMeasure::new(&sft, &[1.0 / phi, 1.0 - 1.0 / phi, 1.0, 0.0]).unwrap();
        let expect = m.stationary[0] + 2.0 * m.stationary[1];
        assert_close(
            roof_integral(&roof, &MeasureSpec::Markov(m)).unwrap(),
            expect,
            1e-12,
        );
    }

    #[test]
    fn rejects_non_positive_roof() {
        assert!(matches!(
            RoofFunction::new(vec![1.0, 0.0]).unwrap_err(),
            SuspensionError::NonPositiveRoof(1, _)
        ));
    }

    #[test]
    fn suspend_constant_roofs() {
        let sft = SftSystem::full_shift(1);
        let w = PeriodicWord::new(&sft, &[0]).unwrap();
        let base = vec![-(2.0f64.ln()), 2.0f64.ln(), 4.0f64.ln()];
        let m = MeasureSpec::Periodic(w);

        let one = RoofFunction::constant(1, 1.0).unwrap();
        let f = suspend_spectrum(&base, &one, &m).unwrap();
        assert_eq!(f.exponents.len(), 4);
        assert_eq!(f.zero_index, 1);
        assert_close(f.exponents[0], base[0], 1e-15);
        assert_close(f.exponents[2], base[1], 1e-15);

        let two = RoofFunction::constant(1, 2.0).unwrap();
        let f = suspend_spectrum(&base, &two, &m).unwrap();
        assert_close(f.exponents[2], base[1] / 2.0, 1e-15);
        assert_close(f.exponents[3], base[2] / 2.0, 1e-15);
    }

    #[test]
    fn suspend_mixed_roof_rescales_by_mean() {
        let sft = SftSystem::golden_mean();
        let w = PeriodicWord::new(&sft, &[0, 0, 1]).unwrap();
        let roof = RoofFunction::new(vec![1.0, 2.0]).unwrap();
        let base = vec![-(2.0f64.ln()), 2.0f64.ln(), 4.0f64.ln()];
        let f = suspend_spectrum(&base, &roof, &MeasureSpec::Periodic(w)).unwrap();
        for (i, &b) in base.iter().enumerate() {
            let idx = if i < f.zero_index { i } else { i + 1 };
            assert_close(f.exponents[idx] * (4.0 / 3.0), b, 1e-12);
        }
    }

    #[test]
    fn correspondence_report_no_violations() {
        let mut g0 = SmallMat::zeros(3);
        g0.set(0, 0, 0.5);
        let r = SmallMat::rotation2(0.3).scale(2.0);
        for a in 0..2 {
            for b in 0..2 {
                g0.set(1 + a, 1 + b, r.get(a, b));
            }
        }
        let g1 = SmallMat::diag(&[1.0 / 3.0, 2.0, 3.0]);
        let c = LinearCocycle::new(3, (1, 2), vec![g0, g1]).unwrap();
        let sft = SftSystem::full_shift(2);
        let orbits = sft.orbits_up_to(6).unwrap();
        for roof in [
            RoofFunction::constant(2, 1.0).unwrap(),
            RoofFunction::constant(2, 2.0).unwrap(),
            RoofFunction::new(vec![0.7, 2.3]).unwrap(),
        ] {
            let report = flow_signature_correspondence(&c, &orbits, &roof).unwrap();
            assert!(report.violations.is_empty(), "{:?}", report.violations);
            assert_eq!(report.rows.len(), orbits.len());
        }
    }

    #[test]
    fn ordering_preserved_under_suspension() {
        let base = vec![-1.5, 0.4, 2.0];
        let sft = SftSystem::full_shift(1);
        let w = PeriodicWord::new(&sft, &[0]).unwrap();
        let roof = RoofFunction::constant(1, 3.0).unwrap();
        let f = suspend_spectrum(&base, &roof, &MeasureSpec::Periodic(w)).unwrap();
        let mut sorted = f.exponents.clone();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(f.exponents, sorted);
    }
}
