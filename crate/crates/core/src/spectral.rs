//! Roots of the characteristic cubic and the modal amplitude coefficients.
//!
//! For a plane wave `exp(i k.x)` the pressure decays in time as a sum of
//! three exponentials `exp(-lambda_j t)`, where the rates solve
//!
//! ```text
//! -tau0 L^3 + L^2 - c0^2 tau1 k^2 L + c0^2 k^2 = 0
//! ```
//!
//! and the weights `A_j` solve the moment system
//! `sum_j A_j lambda_j^m = a_m` for `m = 0, 1, 2` with
//! `a = (0, -tau1/tau0, (1 - tau1/tau0)/tau0)`.
//!
//! Roots come from Cardano's formula with principal branches. The `u_0`
//! root is always labelled `lambda0` and the pair `mu +- i theta` is read off
//! `(C, Delta0)` directly, so the labelling never depends on sorting.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;
use crate::medium::Medium;

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Relative threshold on the smallest root separation below which the
/// closed-form amplitudes are not evaluated.
pub const DEGENERACY_THRESHOLD: f64 = 1e-8;

/// Intermediate quantities of Cardano's formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CardanoDiagnostics {
    pub delta0: f64,
    pub delta1: f64,
    pub big_c: Complex64,
    /// `|Im C| <= 1e-10 |C|`: one real root and a conjugate pair.
    pub real_c_regime: bool,
}

/// The three rates at one wavenumber, `lambda1,2 = mu +- i theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralRoots {
    pub k: f64,
    pub lambda0: Complex64,
    /// Real in the real-C regime.
    pub mu: Complex64,
    /// Real in the real-C regime; purely imaginary when all three roots are real.
    pub theta: Complex64,
    pub diagnostics: CardanoDiagnostics,
}

impl SpectralRoots {
    pub fn lambda1(&self) -> Complex64 {
        self.mu + Complex64::i() * self.theta
    }

    pub fn lambda2(&self) -> Complex64 {
        self.mu - Complex64::i() * self.theta
    }

    pub fn lambdas(&self) -> [Complex64; 3] {
        [self.lambda0, self.lambda1(), self.lambda2()]
    }

    pub fn real_c_regime(&self) -> bool {
        self.diagnostics.real_c_regime
    }

    /// Smallest pairwise distance relative to the largest root modulus.
    pub fn relative_separation(&self) -> f64 {
        let l = self.lambdas();
        let scale = l.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let d01 = (l[0] - l[1]).norm();
        let d02 = (l[0] - l[2]).norm();
        let d12 = (l[1] - l[2]).norm();
        d01.min(d02).min(d12) / scale
    }

    pub fn is_degenerate(&self) -> bool {
        self.relative_separation() < DEGENERACY_THRESHOLD
    }
}

/// Amplitude coefficients `A_0, A_1, A_2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplitudes {
    pub a0_coef: Complex64,
    pub a1_coef: Complex64,
    pub a2_coef: Complex64,
}

impl Amplitudes {
    pub fn as_array(&self) -> [Complex64; 3] {
        [self.a0_coef, self.a1_coef, self.a2_coef]
    }

    /// `|sum_j A_j lambda_j^m - a_m| / scale_m` for `m = 0, 1, 2`, where
    /// `scale_m = max_j |A_j lambda_j^m| + |a_m|`.
    pub fn moment_residuals(&self, roots: &SpectralRoots, medium: &Medium) -> [f64; 3] {
        let a = moments(medium);
        let l = roots.lambdas();
        let amp = self.as_array();
        let mut out = [0.0; 3];
        for (m, slot) in out.iter_mut().enumerate() {
            let terms: Vec<Complex64> = (0..3).map(|j| amp[j] * l[j].powi(m as i32)).collect();
            let sum: Complex64 = terms.iter().sum();
            let scale = terms.iter().map(|z| z.norm()).fold(0.0, f64::max) + a[m].abs();
            *slot = if scale == 0.0 {
                0.0
            } else {
                (sum - a[m]).norm() / scale
            };
        }
        out
    }
}

/// Moment data `(a0, a1, a2)`.
pub fn moments(medium: &Medium) -> [f64; 3] {
    let r = medium.tau_ratio_inv();
    [0.0, -r, (1.0 - r) / medium.tau0()]
}

fn check_k(k: f64) -> Result<()> {
    if k.is_finite() && k >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "k",
            value: k,
            reason: "wavenumber must be finite and >= 0",
        })
    }
}

/// Relative residual of `lambda` in the cubic at `k`:
/// `|p(lambda)| / max(|tau0 L^3|, |L^2|, |c0^2 tau1 k^2 L|, c0^2 k^2)`.
pub fn cubic_residual(medium: &Medium, k: f64, lambda: Complex64) -> f64 {
    let a = medium.c0().powi(2) * k * k;
    let t0 = medium.tau0();
    let t1 = medium.tau1();
    let terms = [
        -t0 * lambda.powi(3),
        lambda * lambda,
        -a * t1 * lambda,
        Complex64::new(a, 0.0),
    ];
    let scale = terms.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    terms.iter().sum::<Complex64>().norm() / scale
}

/// Relative deviations of the three Vieta identities.
pub fn vieta_residuals(medium: &Medium, roots: &SpectralRoots) -> [f64; 3] {
    let [l0, l1, l2] = roots.lambdas();
    let t0 = medium.tau0();
    let a = medium.c0().powi(2) * roots.k * roots.k;
    let rel = |got: Complex64, want: f64, scale: f64| {
        if scale == 0.0 {
            got.norm()
        } else {
            (got - want).norm() / scale
        }
    };
    let s1 = l0 + l1 + l2;
    let s2 = l0 * l1 + l0 * l2 + l1 * l2;
    let s3 = l0 * l1 * l2;
    let s2_scale = (l0 * l1).norm().max((l0 * l2).norm()).max((l1 * l2).norm());
    [
        rel(s1, 1.0 / t0, 1.0 / t0),
        rel(s2, a * medium.tau1() / t0, s2_scale),
        rel(s3, a / t0, s3.norm().max(a / t0)),
    ]
}

/// `Delta0`, `Delta1` and the discriminant `Delta1^2 - 4 Delta0^3`, in terms
/// of `b = c0^2 k^2 tau1^2` and `r = tau0 / tau1`.
///
/// The discriminant is expanded so that its leading `4 - 4` cancels exactly.
fn cardano_coefficients(b: f64, r: f64) -> (f64, f64, f64) {
    let delta0 = 1.0 - 3.0 * b * r;
    let delta1 = 2.0 + 9.0 * b * r * (3.0 * r - 1.0);
    let s = 3.0 * r - 1.0;
    let disc = 108.0 * b * r * r + b * b * r * r * (81.0 * s * s - 108.0) + 108.0 * (b * r).powi(3);
    (delta0, delta1, disc)
}

fn polish_real_root(tau0: f64, tau1: f64, a: f64, mut lambda: f64) -> f64 {
    for _ in 0..2 {
        let p = -tau0 * lambda.powi(3) + lambda * lambda - a * (tau1 * lambda - 1.0);
        let dp = -3.0 * tau0 * lambda * lambda + 2.0 * lambda - a * tau1;
        if dp == 0.0 || !p.is_finite() {
            break;
        }
        let next = lambda - p / dp;
        if !next.is_finite() {
            break;
        }
        lambda = next;
    }
    lambda
}

/// Roots of the characteristic cubic at wavenumber `k` by Cardano's formula.
///
/// In the real-C regime the formula is evaluated in an algebraically
/// identical arrangement that avoids the cancellations in `1 - C` and
/// `C - Delta0/C`, and `lambda0` receives two Newton corrections.
pub fn cardano_roots(medium: &Medium, k: f64) -> Result<SpectralRoots> {
    check_k(k)?;
    let tau0 = medium.tau0();
    let tau1 = medium.tau1();
    let a = medium.c0().powi(2) * k * k;
    let b = a * tau1 * tau1;
    let r = tau0 / tau1;
    let (delta0, delta1, disc) = cardano_coefficients(b, r);

    if k == 0.0 {
        return Ok(SpectralRoots {
            k,
            lambda0: Complex64::new(1.0 / tau0, 0.0),
            mu: Complex64::new(0.0, 0.0),
            theta: Complex64::new(0.0, 0.0),
            diagnostics: CardanoDiagnostics {
                delta0,
                delta1,
                big_c: Complex64::new(1.0, 0.0),
                real_c_regime: true,
            },
        });
    }

    let sq = disc.max(0.0).sqrt();
    let w = 0.5 * (delta1 + sq);
    if disc >= 0.0 && w > 0.0 {
        let c = w.cbrt();
        // w - 1 without forming delta1 - 2
        let t = (4.5 * b * r * (3.0 * r - 1.0) + 0.5 * sq) / (c * c + c + 1.0);
        let x = b * r;
        let lambda0 = (1.0 + c + delta0 / c) / (3.0 * tau0);
        let lambda0 = polish_real_root(tau0, tau1, a, lambda0);

        let inv0 = 1.0 / tau0;
        let gap_a = (inv0 - lambda0).abs();
        let gap_b = (tau1 * lambda0 - 1.0).abs();
        // pick the better conditioned of two exact expressions for mu
        let mu = if inv0 * gap_b < tau1 * lambda0 * gap_a {
            0.5 * (inv0 - lambda0)
        } else {
            a * (tau1 * lambda0 - 1.0) / (2.0 * tau0 * lambda0 * lambda0)
        };
        let theta = SQRT3 * (t * (t + 2.0) + 3.0 * x) / (c * 6.0 * tau0);

        return Ok(SpectralRoots {
            k,
            lambda0: Complex64::new(lambda0, 0.0),
            mu: Complex64::new(mu, 0.0),
            theta: Complex64::new(theta, 0.0),
            diagnostics: CardanoDiagnostics {
                delta0,
                delta1,
                big_c: Complex64::new(c, 0.0),
                real_c_regime: true,
            },
        });
    }

    // general principal-branch evaluation
    let sq = Complex64::new(disc, 0.0).sqrt();
    let mut w = 0.5 * (delta1 + sq);
    if w.norm() == 0.0 {
        w = 0.5 * (delta1 - sq);
    }
    let c = w.cbrt();
    let d_over_c = delta0 / c;
    let lambda0 = (1.0 + c + d_over_c) / (3.0 * tau0);
    let mu = (2.0 - (c + d_over_c)) / (6.0 * tau0);
    let theta = SQRT3 * (c - d_over_c) / (6.0 * tau0);
    Ok(SpectralRoots {
        k,
        lambda0,
        mu,
        theta,
        diagnostics: CardanoDiagnostics {
            delta0,
            delta1,
            big_c: c,
            real_c_regime: c.im.abs() <= 1e-10 * c.norm(),
        },
    })
}

/// Roots when `kappa1 = 0`: `lambda0 = 1/tau1` and `lambda1,2 = +- i c0 k`.
pub fn dissipation_free_roots(c0: f64, tau1: f64, k: f64) -> Result<SpectralRoots> {
    check_k(k)?;
    let b = (c0 * k * tau1).powi(2);
    let (delta0, delta1, disc) = cardano_coefficients(b, 1.0);
    let big_c = if k == 0.0 {
        1.0
    } else {
        (0.5 * (delta1 + disc.max(0.0).sqrt())).cbrt()
    };
    Ok(SpectralRoots {
        k,
        lambda0: Complex64::new(1.0 / tau1, 0.0),
        mu: Complex64::new(0.0, 0.0),
        theta: Complex64::new(c0 * k, 0.0),
        diagnostics: CardanoDiagnostics {
            delta0,
            delta1,
            big_c: Complex64::new(big_c, 0.0),
            real_c_regime: true,
        },
    })
}

fn degeneracy_error(roots: &SpectralRoots) -> Error {
    Error::DegenerateRoots {
        k: roots.k,
        separation: roots.relative_separation(),
    }
}

/// Closed-form amplitude coefficients.
///
/// In the real-C regime the numerator of `A0` is rewritten with the cubic
/// and `1 - tau0 lambda0 = 2 tau0 mu`, giving
/// `A0 = -2 lambda0^2 mu / (c0^2 k^2 |lambda1 - lambda0|^2)`. This removes
/// the cancellation in `a2 - a1 (lambda1 + lambda2)` at both ends of the
/// `k` range.
pub fn amplitudes(roots: &SpectralRoots, medium: &Medium) -> Result<Amplitudes> {
    if roots.is_degenerate() {
        return Err(degeneracy_error(roots));
    }
    let [_, a1, a2] = moments(medium);
    let [l0, l1, l2] = roots.lambdas();
    let a0_coef = if roots.real_c_regime() && roots.k > 0.0 {
        let lam = l0.re;
        let ck2 = (medium.c0() * roots.k).powi(2);
        let sep = (l1 - l0).norm_sqr();
        Complex64::new(-2.0 * lam * lam * roots.mu.re / (ck2 * sep), 0.0)
    } else {
        (a2 - a1 * (l2 + l1)) / ((l2 - l0) * (l1 - l0))
    };
    let a1_coef = (a1 * (l2 + l0) - a2) / ((l1 - l0) * (l2 - l1));
    let a2_coef = (a2 - a1 * (l1 + l0)) / ((l2 - l0) * (l2 - l1));
    Ok(Amplitudes {
        a0_coef,
        a1_coef,
        a2_coef,
    })
}

/// Amplitudes by solving the Vandermonde moment system directly.
pub fn solve_vandermonde(roots: &SpectralRoots, medium: &Medium) -> Result<Amplitudes> {
    if roots.is_degenerate() {
        return Err(Error::SingularSystem { k: roots.k });
    }
    let l = roots.lambdas();
    let one = Complex64::new(1.0, 0.0);
    let matrix = [[one; 3], l, [l[0] * l[0], l[1] * l[1], l[2] * l[2]]];
    let a = moments(medium);
    let rhs = a.map(|v| Complex64::new(v, 0.0));
    let x = linalg::solve3_refined(&matrix, &rhs, 3).ok_or(Error::SingularSystem { k: roots.k })?;
    Ok(Amplitudes {
        a0_coef: x[0],
        a1_coef: x[1],
        a2_coef: x[2],
    })
}

/// Large-`k` limits `(1/tau1, (1/tau0 - 1/tau1)/2)` of `lambda0` and `mu`.
pub fn asymptotic_limits(medium: &Medium) -> (f64, f64) {
    (
        1.0 / medium.tau1(),
        0.5 * (1.0 / medium.tau0() - 1.0 / medium.tau1()),
    )
}

/// Leading-order root approximations for `k << k_c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxRoots {
    pub k: f64,
    pub lambda0: f64,
    pub mu: f64,
    pub theta: f64,
}

/// Small-`k` expansions of the roots:
///
/// ```text
/// lambda0 ~ 1/tau0 - c0^2 (tau1 - tau0) k^2
/// mu      ~ c0^2 (tau1 - tau0) k^2 / 2
/// theta   ~ c0 k
/// ```
pub fn small_k_roots(medium: &Medium, k: f64) -> Result<ApproxRoots> {
    check_k(k)?;
    let s = medium.c0().powi(2) * (medium.tau1() - medium.tau0()) * k * k;
    Ok(ApproxRoots {
        k,
        lambda0: 1.0 / medium.tau0() - s,
        mu: 0.5 * s,
        theta: medium.c0() * k,
    })
}

/// Products `B_j = A_j lambda_j` at `k`, with the `k -> 0` limits
/// `(1 - tau1/tau0, -1/2, -1/2)` below the degeneracy threshold.
pub fn modal_weights(medium: &Medium, roots: &SpectralRoots) -> Result<[Complex64; 3]> {
    let half = Complex64::new(-0.5, 0.0);
    if medium.is_dissipation_free() {
        // A0 = 0 and A1 = -A2 = -1/(2 lambda1)
        return Ok([Complex64::new(0.0, 0.0), half, half]);
    }
    if roots.is_degenerate() {
        if roots.k * medium.c0() * medium.tau1() < 1e-6 {
            return Ok([
                Complex64::new(1.0 - medium.tau_ratio_inv(), 0.0),
                half,
                half,
            ]);
        }
        return Err(degeneracy_error(roots));
    }
    let amp = amplitudes(roots, medium)?;
    let l = roots.lambdas();
    Ok([
        amp.a0_coef * l[0],
        amp.a1_coef * l[1],
        amp.a2_coef * l[2],
    ])
}

/// Log-spaced grid of `n` points over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
                .collect()
        }
    }
}
