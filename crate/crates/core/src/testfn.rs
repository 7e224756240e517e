//! Compactly supported test functions on the box, with closed-form
//! integrals. These are the `f` in linear statistics `⟨f,γ⟩ = Σ_x f(x)`,
//! Laplace functionals and generator evaluations.

#[derive(Clone, Debug, PartialEq)]
pub enum TestFn {
    /// `height · 1_{[lo, hi)}` (product box in d dimensions).
    BoxIndicator { lo: Vec<f64>, hi: Vec<f64>, height: f64 },
    /// Product tent function: `height · Π_a max(0, 1 − |x_a − center_a|/halfwidth)`.
    Hat { center: Vec<f64>, halfwidth: f64, height: f64 },
}

impl TestFn {
    pub fn box_indicator(lo: &[f64], hi: &[f64], height: f64) -> Self {
        assert_eq!(lo.len(), hi.len());
        assert!(lo.iter().zip(hi).all(|(a, b)| a < b), "box must be nonempty");
        TestFn::BoxIndicator { lo: lo.to_vec(), hi: hi.to_vec(), height }
    }

    pub fn hat(center: &[f64], halfwidth: f64, height: f64) -> Self {
        assert!(halfwidth > 0.0);
        TestFn::Hat { center: center.to_vec(), halfwidth, height }
    }

    pub fn dim(&self) -> usize {
        match self {
            TestFn::BoxIndicator { lo, .. } => lo.len(),
            TestFn::Hat { center, .. } => center.len(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            TestFn::BoxIndicator { lo, hi, height } => {
                let inside = x.iter().zip(lo.iter().zip(hi)).all(|(&c, (&a, &b))| c >= a && c < b);
                if inside {
                    *height
                } else {
                    0.0
                }
            }
            TestFn::Hat { center, halfwidth, height } => {
                let mut v = *height;
                for (c, m) in x.iter().zip(center) {
                    let t = 1.0 - (c - m).abs() / halfwidth;
                    if t <= 0.0 {
                        return 0.0;
                    }
                    v *= t;
                }
                v
            }
        }
    }

    /// Support as an axis-aligned box `(lo, hi)`.
    pub fn support(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            TestFn::BoxIndicator { lo, hi, .. } => (lo.clone(), hi.clone()),
            TestFn::Hat { center, halfwidth, .. } => (
                center.iter().map(|c| c - halfwidth).collect(),
                center.iter().map(|c| c + halfwidth).collect(),
            ),
        }
    }

    /// `∫ f dx` in closed form.
    pub fn integral(&self) -> f64 {
        match self {
            TestFn::BoxIndicator { lo, hi, height } => {
                height * lo.iter().zip(hi).map(|(a, b)| b - a).product::<f64>()
            }
            TestFn::Hat { center, halfwidth, height } => {
                height * center.iter().map(|_| halfwidth).product::<f64>()
            }
        }
    }

    /// `∫ f² dx` in closed form.
    pub fn integral_sq(&self) -> f64 {
        match self {
            TestFn::BoxIndicator { lo, hi, height } => {
                height * height * lo.iter().zip(hi).map(|(a, b)| b - a).product::<f64>()
            }
            TestFn::Hat { center, halfwidth, height } => {
                height * height * center.iter().map(|_| 2.0 * halfwidth / 3.0).product::<f64>()
            }
        }
    }

    /// `∫ f·g dx` for two functions of the same kind family (closed form for
    /// box·box; quadrature-free cases only).
    pub fn integral_product(&self, other: &TestFn) -> Option<f64> {
        match (self, other) {
            (
                TestFn::BoxIndicator { lo: la, hi: ha, height: va },
                TestFn::BoxIndicator { lo: lb, hi: hb, height: vb },
            ) => {
                let mut vol = 1.0;
                for a in 0..la.len() {
                    let lo = la[a].max(lb[a]);
                    let hi = ha[a].min(hb[a]);
                    if hi <= lo {
                        return Some(0.0);
                    }
                    vol *= hi - lo;
                }
                Some(va * vb * vol)
            }
            _ => None,
        }
    }

    pub fn is_nonpositive(&self) -> bool {
        match self {
            TestFn::BoxIndicator { height, .. } | TestFn::Hat { height, .. } => *height <= 0.0,
        }
    }

    pub fn scaled(&self, factor: f64) -> TestFn {
        let mut out = self.clone();
        match &mut out {
            TestFn::BoxIndicator { height, .. } | TestFn::Hat { height, .. } => *height *= factor,
        }
        out
    }
}
