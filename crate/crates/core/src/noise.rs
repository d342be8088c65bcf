//! Bounded symmetric noise laws on `[-1, 1]`, reproducible sampling streams
//! and expected-log functionals of the noisy gain.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Law of the noise `ξ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoiseSpec {
    /// `ξ = ±1` with probability ½ each.
    Bernoulli,
    /// `ξ ~ U[-1, 1]`.
    Uniform,
    /// Atoms `(u, p)` with `P{ξ = u} = P{ξ = -u} = p`, `u ∈ (0, 1]`.
    /// Mass not carried by the atoms sits at zero.
    Discrete { atoms: Vec<(f64, f64)> },
}

impl NoiseSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.starts_with('{') {
            let n: NoiseSpec =
                serde_json::from_str(t).map_err(|e| Error::Input(format!("noise: {e}")))?;
            n.validate()?;
            return Ok(n);
        }
        match t.to_ascii_lowercase().as_str() {
            "bernoulli" => Ok(Self::Bernoulli),
            "uniform" => Ok(Self::Uniform),
            other => Err(Error::Input(format!(
                "unknown noise `{other}` (bernoulli, uniform or a JSON object)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Bernoulli => "bernoulli",
            Self::Uniform => "uniform",
            Self::Discrete { .. } => "discrete",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let Self::Discrete { atoms } = self else {
            return Ok(());
        };
        if atoms.is_empty() {
            return Err(Error::Input(
                "discrete noise needs at least one atom".into(),
            ));
        }
        let mut total = 0.0;
        for &(u, p) in atoms {
            if !(u > 0.0 && u <= 1.0) {
                return Err(Error::Input(format!("atom {u} is outside (0, 1]")));
            }
            if !(p > 0.0) {
                return Err(Error::Input(format!("atom {u} has non-positive mass {p}")));
            }
            total += 2.0 * p;
        }
        if total > 1.0 + 1e-12 {
            return Err(Error::Input(format!("atoms carry total mass {total} > 1")));
        }
        if !atoms.iter().any(|&(u, _)| u == 1.0) {
            return Err(Error::Input("discrete noise needs an atom at 1".into()));
        }
        Ok(())
    }

    /// Second moment `E ξ²`.
    pub fn mu2(&self) -> f64 {
        match self {
            Self::Bernoulli => 1.0,
            Self::Uniform => 1.0 / 3.0,
            Self::Discrete { atoms } => atoms.iter().map(|&(u, p)| 2.0 * u * u * p).sum(),
        }
    }

    /// Largest `|ξ|` in the support.
    pub fn sup(&self) -> f64 {
        1.0
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Bernoulli => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Self::Uniform => rng.random_range(-1.0..=1.0),
            Self::Discrete { atoms } => {
                let mut v: f64 = rng.random();
                for &(u, p) in atoms {
                    if v < p {
                        return u;
                    }
                    v -= p;
                    if v < p {
                        return -u;
                    }
                    v -= p;
                }
                0.0
            }
        }
    }

    /// `E g(ξ)`; uniform laws use adaptive Simpson quadrature to `1e-10`.
    pub fn expectation<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        match self {
            Self::Bernoulli => 0.5 * (g(1.0) + g(-1.0)),
            Self::Uniform => 0.5 * adaptive_simpson(&g, -1.0, 1.0, 1e-10),
            Self::Discrete { atoms } => {
                let mut zero = 1.0;
                let mut acc = 0.0;
                for &(u, p) in atoms {
                    acc += p * (g(u) + g(-u));
                    zero -= 2.0 * p;
                }
                if zero > 1e-15 {
                    acc += zero * g(0.0);
                }
                acc
            }
        }
    }

    /// Support points where a monotone function of `ξ` attains its extremes.
    fn extremes(&self) -> [f64; 2] {
        [-self.sup(), self.sup()]
    }
}

/// Reproducible RNG for `(master_seed, stream_index)`.
pub fn stream(master_seed: u64, stream_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream_index);
    rng
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// `𝓛(β) = (1-β)L - β`.
#[inline]
fn script_l(l: f64, beta: f64) -> f64 {
    (1.0 - beta) * l - beta
}

fn check_positive(factors: &[f64], alpha: f64, ell: f64, noise: &NoiseSpec) -> Result<()> {
    for &l in factors {
        for u in noise.extremes() {
            let v = script_l(l, alpha + ell * u);
            if !(v > 0.0) {
                return Err(Error::Infeasible(format!(
                    "(1-β){l} - β = {v} ≤ 0 at β = α + ℓξ = {}",
                    alpha + ell * u
                )));
            }
        }
    }
    Ok(())
}

/// `E ln 𝓛₀(α + ℓξ)` with `𝓛₀(β) = (1-β)L₀ - β`.
pub fn expected_log_l0(l0: f64, alpha: f64, ell: f64, noise: &NoiseSpec) -> Result<f64> {
    check_positive(&[l0], alpha, ell, noise)?;
    Ok(match noise {
        NoiseSpec::Bernoulli => {
            let c = l0 - alpha * (l0 + 1.0);
            let d = ell * (l0 + 1.0);
            0.5 * (c * c - d * d).ln()
        }
        _ => noise.expectation(|u| script_l(l0, alpha + ell * u).ln()),
    })
}

/// `E ln[𝓛⁻(α + ℓξ) 𝓛⁺(α + ℓξ)]`. For Bernoulli noise this is `½ ln 𝒱(α, ℓ)`.
pub fn expected_log_pair(
    l_minus: f64,
    l_plus: f64,
    alpha: f64,
    ell: f64,
    noise: &NoiseSpec,
) -> Result<f64> {
    check_positive(&[l_minus, l_plus], alpha, ell, noise)?;
    Ok(match noise {
        NoiseSpec::Bernoulli => {
            let side = |l: f64| {
                let c = l - alpha * (l + 1.0);
                let d = ell * (l + 1.0);
                c * c - d * d
            };
            0.5 * (side(l_minus) * side(l_plus)).ln()
        }
        _ => noise.expectation(|u| {
            let b = alpha + ell * u;
            script_l(l_minus, b).ln() + script_l(l_plus, b).ln()
        }),
    })
}

/// Average contraction per step when the orbit alternates sides of `K`:
/// half of [`expected_log_pair`], i.e. `¼ ln 𝒱` for Bernoulli noise.
pub fn pair_rate_per_step(
    l_minus: f64,
    l_plus: f64,
    alpha: f64,
    ell: f64,
    noise: &NoiseSpec,
) -> Result<f64> {
    expected_log_pair(l_minus, l_plus, alpha, ell, noise).map(|v| 0.5 * v)
}

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub draws: u64,
    /// Draws where the integrand was not finite (they are excluded from the mean).
    pub violations: u64,
}

impl McEstimate {
    pub fn within(&self, exact: f64, sigmas: f64) -> bool {
        (self.mean - exact).abs() <= sigmas * self.std_err.max(1e-15)
    }
}

/// Monte Carlo estimate of `E g(ξ)` on one stream.
pub fn monte_carlo<F: Fn(f64) -> f64>(
    noise: &NoiseSpec,
    g: F,
    draws: u64,
    seed: u64,
    stream_index: u64,
) -> McEstimate {
    let mut rng = stream(seed, stream_index);
    let (mut n, mut mean, mut m2, mut bad) = (0u64, 0.0f64, 0.0f64, 0u64);
    for _ in 0..draws {
        let v = g(noise.sample(&mut rng));
        if !v.is_finite() {
            bad += 1;
            continue;
        }
        n += 1;
        let d = v - mean;
        mean += d / n as f64;
        m2 += d * (v - mean);
    }
    let var = if n > 1 { m2 / (n - 1) as f64 } else { 0.0 };
    McEstimate {
        mean,
        std_err: (var / n.max(1) as f64).sqrt(),
        draws,
        violations: bad,
    }
}
