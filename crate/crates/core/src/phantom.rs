//! Nodal coefficient fields: affine ramps, the modified Shepp-Logan head and
//! a Derenzo-style disc phantom, all on the unit square.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{Point, SpatialGrid};

/// `(amplitude, semi-axis a, semi-axis b, x0, y0, rotation in degrees)` on `[-1, 1]^2`.
const SHEPP_LOGAN_MODIFIED: [[f64; 6]; 10] = [
    [1.0, 0.69, 0.92, 0.0, 0.0, 0.0],
    [-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0],
    [-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0],
    [-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0],
    [0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0],
    [0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0],
    [0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0],
    [0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0],
    [0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0],
    [0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0],
];

/// Modified Shepp-Logan intensity in `[0, 1]` at a point of the unit square.
pub fn shepp_logan(p: Point) -> f64 {
    let (x, y) = (2.0 * p[0] - 1.0, 2.0 * p[1] - 1.0);
    let mut v = 0.0;
    for [amp, a, b, x0, y0, deg] in SHEPP_LOGAN_MODIFIED {
        let (s, c) = (deg * PI / 180.0).sin_cos();
        let (dx, dy) = (x - x0, y - y0);
        let u = dx * c + dy * s;
        let w = -dx * s + dy * c;
        if (u / a).powi(2) + (w / b).powi(2) <= 1.0 {
            v += amp;
        }
    }
    v.clamp(0.0, 1.0)
}

/// Default disc radii of the six Derenzo sectors, largest first.
pub const DERENZO_RADII: [f64; 6] = [0.045, 0.036, 0.029, 0.023, 0.018, 0.014];

/// Whether `p` falls inside one of the Derenzo discs. Sectors of 60 degrees
/// around the square's center each hold a triangular array of equal discs
/// with center spacing four radii.
pub fn derenzo_insert(p: Point, radii: &[f64]) -> bool {
    let (x, y) = (p[0] - 0.5, p[1] - 0.5);
    let r = (x * x + y * y).sqrt();
    let (inner, outer) = (0.06, 0.43);
    if r < inner || r > outer || radii.is_empty() {
        return false;
    }
    let sectors = radii.len();
    let width = 2.0 * PI / sectors as f64;
    let angle = y.atan2(x).rem_euclid(2.0 * PI);
    let s = ((angle / width) as usize).min(sectors - 1);
    let rho = radii[s];
    let pitch = 4.0 * rho;
    // Local frame: radial axis along the sector bisector.
    let mid = (s as f64 + 0.5) * width;
    let (sn, cs) = mid.sin_cos();
    let along = x * cs + y * sn;
    let across = -x * sn + y * cs;
    let row = ((along - inner - rho) / (pitch * 0.75f64.sqrt())).round();
    if row < 0.0 {
        return false;
    }
    let cx = inner + rho + row * pitch * 0.75f64.sqrt();
    let shift = if row as i64 % 2 == 0 { 0.0 } else { 0.5 * pitch };
    let col = ((across - shift) / pitch).round();
    let cy = shift + col * pitch;
    let (dx, dy) = (along - cx, across - cy);
    if dx * dx + dy * dy > rho * rho {
        return false;
    }
    // Whole disc must sit inside its wedge and the outer ring.
    let half = 0.5 * width;
    let ang_off = cy.atan2(cx).abs();
    let c_r = (cx * cx + cy * cy).sqrt();
    c_r + rho <= outer && ang_off + (rho / c_r).asin() <= half
}

/// Named coefficient field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Phantom {
    Constant {
        value: f64,
    },
    /// `a + b x + c y`
    Affine {
        a: f64,
        #[serde(default)]
        b: f64,
        #[serde(default)]
        c: f64,
    },
    /// `lo + (hi - lo) P` with `P` the modified Shepp-Logan intensity.
    SheppLoganModified {
        lo: f64,
        hi: f64,
    },
    /// `insert` inside the discs, `background` elsewhere.
    Derenzo {
        background: f64,
        insert: f64,
        #[serde(default)]
        radii: Option<Vec<f64>>,
    },
}

impl Phantom {
    pub fn affine(a: f64, b: f64, c: f64) -> Self {
        Phantom::Affine { a, b, c }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Phantom::Constant { .. } => "constant",
            Phantom::Affine { .. } => "affine",
            Phantom::SheppLoganModified { .. } => "shepp-logan-modified",
            Phantom::Derenzo { .. } => "derenzo",
        }
    }

    /// Parses `constant:<v>`, `affine:<a>,<b>,<c>`, `shepp-logan-modified:<lo>,<hi>`
    /// or `derenzo:<background>,<insert>`.
    pub fn parse(s: &str) -> Result<Self> {
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let nums: Vec<f64> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|e| invalid(format!("bad number '{t}' in phantom: {e}"))))
                .collect::<Result<_>>()?
        };
        let need = |n: usize| -> Result<()> {
            if nums.len() == n {
                Ok(())
            } else {
                Err(invalid(format!("phantom '{name}' takes {n} parameters, got {}", nums.len())))
            }
        };
        Ok(match name {
            "constant" => {
                need(1)?;
                Phantom::Constant { value: nums[0] }
            }
            "affine" => {
                need(3)?;
                Phantom::affine(nums[0], nums[1], nums[2])
            }
            "shepp-logan-modified" => {
                need(2)?;
                Phantom::SheppLoganModified { lo: nums[0], hi: nums[1] }
            }
            "derenzo" => {
                need(2)?;
                Phantom::Derenzo { background: nums[0], insert: nums[1], radii: None }
            }
            other => return Err(invalid(format!("unknown phantom '{other}'"))),
        })
    }

    pub fn value(&self, p: Point) -> f64 {
        match self {
            Phantom::Constant { value } => *value,
            Phantom::Affine { a, b, c } => a + b * p[0] + c * p[1],
            Phantom::SheppLoganModified { lo, hi } => lo + (hi - lo) * shepp_logan(p),
            Phantom::Derenzo { background, insert, radii } => {
                let radii = radii.as_deref().unwrap_or(&DERENZO_RADII);
                if derenzo_insert(p, radii) {
                    *insert
                } else {
                    *background
                }
            }
        }
    }

    /// Nodal samples; ghost nodes take the value at their projection.
    pub fn sample(&self, grid: &SpatialGrid) -> Vec<f64> {
        grid.sample(|p| self.value(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shepp_logan_levels() {
        assert_eq!(shepp_logan([0.0, 0.0]), 0.0);
        // Inside the skull ring only.
        assert!((shepp_logan([0.5, 0.5 + 0.45]) - 1.0).abs() < 1e-12);
        // Brain matter.
        assert!((shepp_logan([0.5, 0.3]) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn derenzo_has_discs_in_every_sector() {
        let grid = SpatialGrid::unit_square(257, 257).unwrap();
        let f = Phantom::Derenzo { background: 0.2, insert: 0.6, radii: None }.sample(&grid);
        let mut seen = [false; 6];
        for (i, v) in f.iter().enumerate() {
            if *v == 0.6 {
                let p = grid.position(i);
                let a = (p[1] - 0.5).atan2(p[0] - 0.5).rem_euclid(2.0 * PI);
                seen[((a / (PI / 3.0)) as usize).min(5)] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn parse_roundtrip() {
        assert_eq!(Phantom::parse("affine:0.2,0,0.2").unwrap(), Phantom::affine(0.2, 0.0, 0.2));
        assert!(Phantom::parse("unknown:1").is_err());
        assert!(Phantom::parse("affine:1,2").is_err());
    }
}
