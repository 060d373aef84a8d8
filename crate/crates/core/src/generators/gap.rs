use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{PointSet, ProblemSpec};
use crate::moments::gamma_p;
use crate::rng;

/// `m` i.i.d. standard Gaussian points in `R^n`, each scaled by `m^(-1/p)`,
/// with `k = n - 1`.
///
/// At this scaling the cost of any fixed unit `z` concentrates around
/// `gamma_p`, while the relaxation witness `X = I/n` stays near 1.
pub fn gaussian_gap_instance(n: usize, m: usize, p: f64, seed: u64) -> Result<(PointSet, ProblemSpec)> {
    if n < 2 {
        return Err(Error::invalid(format!("gap instance needs n >= 2, got {n}")));
    }
    if m == 0 {
        return Err(Error::invalid("gap instance needs m >= 1"));
    }
    let spec = ProblemSpec::new(n, n - 1, p)?;
    let scale = (m as f64).powf(-1.0 / p);
    let mut r = rng::stream(seed, 0);
    // Row-major draw order so a prefix of rows does not depend on m.
    let mut data = vec![0.0; m * n];
    for v in data.iter_mut() {
        let g: f64 = StandardNormal.sample(&mut r);
        *v = scale * g;
    }
    let rows = DMatrix::from_row_slice(m, n, &data);
    Ok((PointSet::new(rows)?, spec))
}

/// Parameter schedule of the net argument behind the Gaussian gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapNetParameters {
    pub epsilon: f64,
    pub delta: f64,
    /// Required number of points; `inf` when it overflows a double.
    pub m_min: f64,
    pub log10_m_min: f64,
    /// `log10((9/delta)^n)`, the size of the delta-net.
    pub log10_net_size: f64,
}

/// `eps = eta^2/8`, `delta = eta^2 gamma_p^p / ((8 + eta^2) p n^((p-1)/2))` and
/// `m_min = max{4 (9/delta)^n (g_2p^2p - g_p^2p) / (eps^2 g_p^2p), 5/eps^2, 9/eta^2}`.
///
/// The first term is astronomically large for any interesting `n`; it is
/// reported, never used to size experiments.
pub fn gap_net_parameters(n: usize, p: f64, eta: f64) -> Result<GapNetParameters> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::invalid(format!("eta must lie in (0, 1), got {eta}")));
    }
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let gp_p = gamma_p(p)?.powf(p);
    let g2p_2p = gamma_p(2.0 * p)?.powf(2.0 * p);
    let eta2 = eta * eta;
    let epsilon = eta2 / 8.0;
    let delta = eta2 * gp_p / ((8.0 + eta2) * p * (n as f64).powf((p - 1.0) / 2.0));

    let ln10 = std::f64::consts::LN_10;
    let log10_net_size = n as f64 * (9.0 / delta).log10();
    let variance_ratio = (g2p_2p - gp_p * gp_p) / (epsilon * epsilon * gp_p * gp_p);
    let log10_net_term = 4f64.log10() + log10_net_size + variance_ratio.log10();
    let log10_m_min = log10_net_term
        .max((5.0 / (epsilon * epsilon)).log10())
        .max((9.0 / eta2).log10());
    Ok(GapNetParameters {
        epsilon,
        delta,
        m_min: (log10_m_min * ln10).exp(),
        log10_m_min,
        log10_net_size,
    })
}
