//! Smooth cutoff localizing layer terms near the wall: chi = 0 on [0, 1/2],
//! chi = 1 on [3/4, 1], with the standard C-infinity bridge
//! S(t) = e^{-1/t} / (e^{-1/t} + e^{-1/(1-t)}) on the transition.

/// chi(r) and its first two derivatives, all analytic.
///
/// On the bridge, S(t) = sigmoid(-g(t)) with g = 1/t - 1/(1-t), which gives
/// closed-form derivatives without differencing.
#[derive(Debug, Clone, Copy, Default)]
pub struct Cutoff;

const LO: f64 = 0.5;
const HI: f64 = 0.75;
const W: f64 = HI - LO;

impl Cutoff {
    pub fn chi(&self, r: f64) -> f64 {
        if r <= LO {
            0.0
        } else if r >= HI {
            1.0
        } else {
            let t = (r - LO) / W;
            sigma(g(t))
        }
    }

    pub fn dchi(&self, r: f64) -> f64 {
        if r <= LO || r >= HI {
            0.0
        } else {
            let t = (r - LO) / W;
            let s = sigma(g(t));
            -s * (1.0 - s) * dg(t) / W
        }
    }

    pub fn d2chi(&self, r: f64) -> f64 {
        if r <= LO || r >= HI {
            0.0
        } else {
            let t = (r - LO) / W;
            let s = sigma(g(t));
            let sp = s * (1.0 - s);
            (sp * (1.0 - 2.0 * s) * dg(t) * dg(t) - sp * d2g(t)) / (W * W)
        }
    }

    /// r chi'' + chi' - chi / r, the source profile of the radial corrector.
    pub fn corrector_source(&self, r: f64) -> f64 {
        r * self.d2chi(r) + self.dchi(r) - self.chi(r) / r
    }
}

fn g(t: f64) -> f64 {
    1.0 / t - 1.0 / (1.0 - t)
}

fn dg(t: f64) -> f64 {
    -1.0 / (t * t) - 1.0 / ((1.0 - t) * (1.0 - t))
}

fn d2g(t: f64) -> f64 {
    2.0 / (t * t * t) - 2.0 / ((1.0 - t) * (1.0 - t) * (1.0 - t))
}

fn sigma(x: f64) -> f64 {
    1.0 / (1.0 + x.exp())
}
