//! Point symmetries of the rotating system and their Lie algebra.
//!
//! Generators are vector fields on the space (t, x, y, u, v, h). The
//! primitive fields are translations P₀, P₁, P₂, the rotation L, the
//! time-dependent boosts G₁, G₂, the dilation D, and the fields Z₁, Z₂
//! mixing time translation with rotation (all trigonometric in 2Ωt). The
//! working basis Y₁…Y₉ combines them so the commutation table has constant
//! coefficients:
//!
//!   Y₁ = P₂ − 2ΩG₂, Y₂ = −(P₁ + 2ΩG₁), Y₃ = P₁ − 2ΩG₁, Y₄ = P₂ + 2ΩG₂,
//!   Y₅ = −L, Y₆ = D, Y₇ = P₀ + ΩL − Z₂, Y₈ = P₀ + ΩL + Z₂, Y₉ = −Z₁/Ω.
//!
//! Brackets are computed numerically, [A, B]ⁱ = Bʲ∂ⱼAⁱ − Aʲ∂ⱼBⁱ, with
//! fourth-order stencils, and the structure constants are recovered by a
//! least-squares fit of each bracket against the basis fields over a fixed
//! deterministic sample set. {Y₁…Y₆} closes as a solvable ideal.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// A point of the extended space (t, x, y, u, v, h).
pub type Vec6 = [f64; 6];

/// A vector field on the extended space.
pub type VectorField = Box<dyn Fn(Vec6) -> Vec6 + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GenId {
    P0,
    P1,
    P2,
    L,
    G1,
    G2,
    D,
    Z1,
    Z2,
    Y1,
    Y2,
    Y3,
    Y4,
    Y5,
    Y6,
    Y7,
    Y8,
    Y9,
}

impl GenId {
    /// The working basis, in order.
    pub const BASIS: [GenId; 9] = [
        GenId::Y1,
        GenId::Y2,
        GenId::Y3,
        GenId::Y4,
        GenId::Y5,
        GenId::Y6,
        GenId::Y7,
        GenId::Y8,
        GenId::Y9,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GenId::P0 => "P0",
            GenId::P1 => "P1",
            GenId::P2 => "P2",
            GenId::L => "L",
            GenId::G1 => "G1",
            GenId::G2 => "G2",
            GenId::D => "D",
            GenId::Z1 => "Z1",
            GenId::Z2 => "Z2",
            GenId::Y1 => "Y1",
            GenId::Y2 => "Y2",
            GenId::Y3 => "Y3",
            GenId::Y4 => "Y4",
            GenId::Y5 => "Y5",
            GenId::Y6 => "Y6",
            GenId::Y7 => "Y7",
            GenId::Y8 => "Y8",
            GenId::Y9 => "Y9",
        }
    }
}

impl std::fmt::Display for GenId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymmetryError {
    #[error("degenerate sample set: {0}")]
    DegenerateSamples(String),
    #[error("omega must be positive, got {0}")]
    InvalidOmega(f64),
}

fn axpy(a: Vec6, s: f64, b: Vec6) -> Vec6 {
    std::array::from_fn(|i| a[i] + s * b[i])
}

fn scale(s: f64, a: Vec6) -> Vec6 {
    std::array::from_fn(|i| s * a[i])
}

/// Evaluate one generator at a point.
pub fn eval_generator(id: GenId, omega: f64, p: Vec6) -> Vec6 {
    let w = omega;
    let [t, x, y, u, v, h] = p;
    let (s2, c2) = (2.0 * w * t).sin_cos();
    match id {
        GenId::P0 => [1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        GenId::P1 => [0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
        GenId::P2 => [0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
        GenId::L => [0.0, y, -x, v, -u, 0.0],
        GenId::G1 => [0.0, -c2 / (2.0 * w), s2 / (2.0 * w), s2, c2, 0.0],
        GenId::G2 => [0.0, s2 / (2.0 * w), c2 / (2.0 * w), c2, -s2, 0.0],
        GenId::D => [0.0, x, y, u, v, 2.0 * h],
        GenId::Z1 => [
            s2,
            w * (x * c2 + y * s2),
            w * (y * c2 - x * s2),
            w * ((2.0 * w * y - u) * c2 - (2.0 * w * x - v) * s2),
            -w * ((2.0 * w * x + v) * c2 + (2.0 * w * y + u) * s2),
            -2.0 * w * h * c2,
        ],
        GenId::Z2 => [
            c2,
            w * (y * c2 - x * s2),
            -w * (x * c2 + y * s2),
            -w * ((2.0 * w * y - u) * s2 + (2.0 * w * x - v) * c2),
            w * ((2.0 * w * x + v) * s2 - (2.0 * w * y + u) * c2),
            2.0 * w * h * s2,
        ],
        GenId::Y1 => axpy(eval_generator(GenId::P2, w, p), -2.0 * w, eval_generator(GenId::G2, w, p)),
        GenId::Y2 => scale(
            -1.0,
            axpy(eval_generator(GenId::P1, w, p), 2.0 * w, eval_generator(GenId::G1, w, p)),
        ),
        GenId::Y3 => axpy(eval_generator(GenId::P1, w, p), -2.0 * w, eval_generator(GenId::G1, w, p)),
        GenId::Y4 => axpy(eval_generator(GenId::P2, w, p), 2.0 * w, eval_generator(GenId::G2, w, p)),
        GenId::Y5 => scale(-1.0, eval_generator(GenId::L, w, p)),
        GenId::Y6 => eval_generator(GenId::D, w, p),
        GenId::Y7 => axpy(
            axpy(eval_generator(GenId::P0, w, p), w, eval_generator(GenId::L, w, p)),
            -1.0,
            eval_generator(GenId::Z2, w, p),
        ),
        GenId::Y8 => axpy(
            axpy(eval_generator(GenId::P0, w, p), w, eval_generator(GenId::L, w, p)),
            1.0,
            eval_generator(GenId::Z2, w, p),
        ),
        GenId::Y9 => scale(-1.0 / w, eval_generator(GenId::Z1, w, p)),
    }
}

/// Generator as an owned vector field.
pub fn generator(id: GenId, omega: f64) -> VectorField {
    Box::new(move |p| eval_generator(id, omega, p))
}

/// ∂ⱼF at `p` by a fourth-order central stencil.
fn partial(f: &dyn Fn(Vec6) -> Vec6, p: Vec6, j: usize, h: f64) -> Vec6 {
    let at = |k: f64| {
        let mut q = p;
        q[j] += k * h;
        f(q)
    };
    let (p2, p1, m1, m2) = (at(2.0), at(1.0), at(-1.0), at(-2.0));
    std::array::from_fn(|i| (-p2[i] + 8.0 * p1[i] - 8.0 * m1[i] + m2[i]) / (12.0 * h))
}

/// Numerical Lie bracket [A, B]ⁱ = Bʲ∂ⱼAⁱ − Aʲ∂ⱼBⁱ at one point.
pub fn lie_bracket(a: &dyn Fn(Vec6) -> Vec6, b: &dyn Fn(Vec6) -> Vec6, p: Vec6) -> Vec6 {
    let av = a(p);
    let bv = b(p);
    let mut out = [0.0f64; 6];
    for j in 0..6 {
        let h = 1e-4 * p[j].abs().max(1.0);
        let da = partial(a, p, j, h);
        let db = partial(b, p, j, h);
        for i in 0..6 {
            out[i] += bv[j] * da[i] - av[j] * db[i];
        }
    }
    out
}

/// Structure constants of the working basis: [Y_a, Y_b] = c[a][b][k]·Y_k
/// (0-based indices into `GenId::BASIS`).
#[derive(Debug, Clone, PartialEq)]
pub struct StructureTable {
    pub omega: f64,
    pub c: [[[f64; 9]; 9]; 9],
}

impl StructureTable {
    pub fn coeff(&self, a: usize, b: usize, k: usize) -> f64 {
        self.c[a][b][k]
    }

    /// max |c[a][b][k] + c[b][a][k]| over all entries.
    pub fn antisymmetry_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..9 {
            for b in 0..9 {
                for k in 0..9 {
                    worst = worst.max((self.c[a][b][k] + self.c[b][a][k]).abs());
                }
            }
        }
        worst
    }

    /// max_k |Σ_m c_ab^m c_mc^k + c_bc^m c_ma^k + c_ca^m c_mb^k| for one
    /// index triple.
    pub fn jacobi_residual(&self, a: usize, b: usize, cc: usize) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..9 {
            let mut s = 0.0;
            for m in 0..9 {
                s += self.c[a][b][m] * self.c[m][cc][k]
                    + self.c[b][cc][m] * self.c[m][a][k]
                    + self.c[cc][a][m] * self.c[m][b][k];
            }
            worst = worst.max(s.abs());
        }
        worst
    }

    /// Largest coefficient outside `members` produced by bracketing any
    /// basis element with a member; zero iff span(members) is an ideal.
    pub fn ideal_residual(&self, members: &[usize]) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..9 {
            for &b in members {
                for k in 0..9 {
                    if !members.contains(&k) {
                        worst = worst.max(self.c[a][b][k].abs());
                    }
                }
            }
        }
        worst
    }

    pub fn max_diff(&self, other: &StructureTable) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..9 {
            for b in 0..9 {
                for k in 0..9 {
                    worst = worst.max((self.c[a][b][k] - other.c[a][b][k]).abs());
                }
            }
        }
        worst
    }
}

/// The closed-form commutation table of the working basis.
pub fn expected_table(omega: f64) -> StructureTable {
    let w = omega;
    let mut c = [[[0.0f64; 9]; 9]; 9];
    // 1-based (a, b, k, value); antisymmetric completion below.
    let entries: [(usize, usize, usize, f64); 19] = [
        (1, 5, 2, -1.0),
        (1, 6, 1, -1.0),
        (1, 8, 3, -2.0 * w),
        (1, 9, 1, -1.0),
        (2, 5, 1, 1.0),
        (2, 6, 2, -1.0),
        (2, 8, 4, -2.0 * w),
        (2, 9, 2, -1.0),
        (3, 5, 4, -1.0),
        (3, 6, 3, -1.0),
        (3, 7, 1, 2.0 * w),
        (3, 9, 3, 1.0),
        (4, 5, 3, 1.0),
        (4, 6, 4, -1.0),
        (4, 7, 2, 2.0 * w),
        (4, 9, 4, 1.0),
        (7, 8, 9, -4.0 * w * w),
        (7, 9, 7, -2.0),
        (8, 9, 8, 2.0),
    ];
    for (a, b, k, val) in entries {
        c[a - 1][b - 1][k - 1] = val;
        c[b - 1][a - 1][k - 1] = -val;
    }
    StructureTable { omega, c }
}

/// Deterministic sample points for the least-squares fit.
fn sample_points(n: usize) -> Vec<Vec6> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5357_574C);
    (0..n)
        .map(|_| {
            [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-1.5..1.5),
                rng.gen_range(-1.5..1.5),
                rng.gen_range(0.5..2.5),
            ]
        })
        .collect()
}

/// Solve the symmetric positive-definite 9×9 system G·x = r by Gaussian
/// elimination with partial pivoting. Returns None when a pivot collapses.
fn solve9(g: &[[f64; 9]; 9], r: &[f64; 9]) -> Option<[f64; 9]> {
    let mut a = *g;
    let mut b = *r;
    let scale = a
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..9 {
        let piv = (col..9).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).expect("finite")
        })?;
        if a[piv][col].abs() < 1e-10 * scale.max(1.0) {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..9 {
            let f = a[row][col] / a[col][col];
            for k in col..9 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0f64; 9];
    for col in (0..9).rev() {
        let mut s = b[col];
        for k in col + 1..9 {
            s -= a[col][k] * x[k];
        }
        x[col] = s / a[col][col];
    }
    Some(x)
}

/// Measure the structure constants of the working basis numerically:
/// every ordered bracket is evaluated at `samples` fixed random points and
/// fitted against the basis fields by least squares. Needs at least 6
/// samples; the normal matrix is factored from one shared sample set, so
/// antisymmetry of the result reflects the bracket itself.
pub fn structure_constants(omega: f64, samples: usize) -> Result<StructureTable, SymmetryError> {
    if !(omega > 0.0) {
        return Err(SymmetryError::InvalidOmega(omega));
    }
    if samples < 6 {
        return Err(SymmetryError::DegenerateSamples(format!(
            "{samples} samples requested, need at least 6"
        )));
    }
    let pts = sample_points(samples);
    let fields: Vec<VectorField> = GenId::BASIS.iter().map(|&id| generator(id, omega)).collect();

    // Basis matrix columns, stacked sample-major: col[k][n*6 + i].
    let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(samples * 6); 9];
    for (k, f) in fields.iter().enumerate() {
        for p in &pts {
            cols[k].extend_from_slice(&f(*p));
        }
    }
    let mut gram = [[0.0f64; 9]; 9];
    for i in 0..9 {
        for j in 0..9 {
            gram[i][j] = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
        }
    }

    let mut table = StructureTable { omega, c: [[[0.0; 9]; 9]; 9] };
    let mut rhs_vec = vec![0.0f64; samples * 6];
    for a in 0..9 {
        for b in 0..9 {
            if a == b {
                continue;
            }
            for (n, p) in pts.iter().enumerate() {
                let br = lie_bracket(&*fields[a], &*fields[b], *p);
                rhs_vec[n * 6..n * 6 + 6].copy_from_slice(&br);
            }
            let mut rhs = [0.0f64; 9];
            for (k, col) in cols.iter().enumerate() {
                rhs[k] = col.iter().zip(rhs_vec.iter()).map(|(x, y)| x * y).sum();
            }
            table.c[a][b] = solve9(&gram, &rhs).ok_or_else(|| {
                SymmetryError::DegenerateSamples("basis sample matrix is rank-deficient".into())
            })?;
        }
    }
    Ok(table)
}
