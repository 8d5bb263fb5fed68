//! Problem instances: a state on A ⊗ B ⊗ R and a joint measurement on A, with the
//! JSON file format and the bundled fixtures.

use std::fmt;

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, DensityOperator, HermitianOperator, SystemLayout, C64};
use crate::objects::{instrument_to_povm, Instrument, JointPOVM};

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub dims: Dims,
    pub state: DensityOperator,
    pub povm: JointPOVM,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    #[serde(rename = "A")]
    pub a: usize,
    #[serde(rename = "B")]
    pub b: usize,
    #[serde(rename = "R")]
    pub r: usize,
}

type RawMatrix = Vec<[f64; 2]>;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    dims: Dims,
    state: RawMatrix,
    povm: RawPovm,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPovm {
    #[serde(rename = "alphabetX")]
    alphabet_x: Vec<String>,
    #[serde(rename = "alphabetY")]
    alphabet_y: Vec<String>,
    elements: OrderedElements,
}

/// Map that keeps file order on both read and write.
struct OrderedElements(Vec<(String, RawMatrix)>);

impl Serialize for OrderedElements {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            m.serialize_entry(k, v)?;
        }
        m.end()
    }
}

impl<'de> Deserialize<'de> for OrderedElements {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = OrderedElements;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map from \"x|y\" to a matrix")
            }
            fn visit_map<M: MapAccess<'de>>(self, mut map: M) -> std::result::Result<Self::Value, M::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, RawMatrix>()? {
                    out.push((k, v));
                }
                Ok(OrderedElements(out))
            }
        }
        d.deserialize_map(V)
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInstance(msg.into())
}

fn to_matrix(raw: &RawMatrix, dim: usize, what: &str) -> Result<HermitianOperator> {
    if raw.len() != dim * dim {
        return Err(invalid(format!(
            "{what}: expected {} entries, found {}",
            dim * dim,
            raw.len()
        )));
    }
    if raw.iter().flatten().any(|v| !v.is_finite()) {
        return Err(invalid(format!("{what}: non-finite entry")));
    }
    let m = ComplexMatrix::from_vec(dim, dim, raw.iter().map(|[re, im]| C64::new(*re, *im)).collect())?;
    HermitianOperator::new(m).map_err(|e| invalid(format!("{what}: {e}")))
}

fn from_matrix(m: &ComplexMatrix) -> RawMatrix {
    m.data().iter().map(|z| [z.re + 0.0, z.im + 0.0]).collect()
}

impl Instance {
    pub fn new(dims: Dims, state: DensityOperator, povm: JointPOVM) -> Result<Self> {
        if dims.a == 0 || dims.b == 0 || dims.r == 0 {
            return Err(invalid("dimensions must be positive"));
        }
        if state.dim() != dims.a * dims.b * dims.r {
            return Err(invalid(format!(
                "state has dimension {}, dims multiply to {}",
                state.dim(),
                dims.a * dims.b * dims.r
            )));
        }
        if povm.dim() != dims.a {
            return Err(invalid(format!(
                "POVM acts on dimension {}, A has dimension {}",
                povm.dim(),
                dims.a
            )));
        }
        Ok(Self { dims, state, povm })
    }

    /// Factors "A", "B", "R" in that order.
    pub fn layout(&self) -> SystemLayout {
        SystemLayout::new([("A", self.dims.a), ("B", self.dims.b), ("R", self.dims.r)])
            .expect("dimensions validated on construction")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawInstance = serde_json::from_str(text).map_err(|e| invalid(e.to_string()))?;
        let dims = raw.dims;
        if dims.a == 0 || dims.b == 0 || dims.r == 0 {
            return Err(invalid("dimensions must be positive"));
        }
        let n = dims.a * dims.b * dims.r;
        let state = DensityOperator::new(to_matrix(&raw.state, n, "state")?)
            .map_err(|e| invalid(format!("state: {e}")))?;
        let RawPovm {
            alphabet_x,
            alphabet_y,
            elements,
        } = raw.povm;
        for alpha in [&alphabet_x, &alphabet_y] {
            for (i, s) in alpha.iter().enumerate() {
                if s.contains('|') {
                    return Err(invalid(format!("symbol `{s}` contains `|`")));
                }
                if alpha[..i].contains(s) {
                    return Err(invalid(format!("duplicate symbol `{s}`")));
                }
            }
        }
        let expected: Vec<String> = alphabet_x
            .iter()
            .flat_map(|x| alphabet_y.iter().map(move |y| format!("{x}|{y}")))
            .collect();
        let keys: Vec<&str> = elements.0.iter().map(|(k, _)| k.as_str()).collect();
        if keys != expected {
            return Err(invalid(format!(
                "POVM keys must be {expected:?} in x-major order, found {keys:?}"
            )));
        }
        let ops = elements
            .0
            .iter()
            .map(|(k, m)| to_matrix(m, dims.a, &format!("element {k}")))
            .collect::<Result<Vec<_>>>()?;
        let povm = JointPOVM::new(alphabet_x, alphabet_y, ops).map_err(|e| match e {
            Error::InvalidInstance(m) => Error::InvalidInstance(m),
            other => invalid(other.to_string()),
        })?;
        Self::new(dims, state, povm)
    }

    /// Pretty JSON with elements in x-major order and a trailing newline.
    pub fn to_json(&self) -> String {
        let mut elements = Vec::new();
        for ix in 0..self.povm.nx() {
            for iy in 0..self.povm.ny() {
                elements.push((self.povm.label(ix, iy), from_matrix(self.povm.element(ix, iy))));
            }
        }
        let raw = RawInstance {
            dims: self.dims,
            state: from_matrix(&self.state),
            povm: RawPovm {
                alphabet_x: self.povm.alphabet_x().to_vec(),
                alphabet_y: self.povm.alphabet_y().to_vec(),
                elements: OrderedElements(elements),
            },
        };
        let mut s = serde_json::to_string_pretty(&raw).expect("serialisable");
        s.push('\n');
        s
    }

    /// Parse, then check that the text is already in canonical form.
    pub fn from_canonical_json(text: &str) -> Result<Self> {
        let inst = Self::from_json(text)?;
        if inst.to_json() != text {
            return Err(invalid("file is not in canonical form"));
        }
        Ok(inst)
    }
}

fn syms(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn ket(v: &[f64]) -> Vec<C64> {
    v.iter().map(|&x| C64::new(x, 0.0)).collect()
}

fn projector(v: &[C64]) -> HermitianOperator {
    let n = crate::linalg::norm(v);
    let u: Vec<C64> = v.iter().map(|z| z / n).collect();
    HermitianOperator::pure(&u)
}

fn basis(d: usize, i: usize) -> HermitianOperator {
    let mut p = vec![0.0; d];
    p[i] = 1.0;
    HermitianOperator::diag(&p)
}

fn kron_all(ops: &[&HermitianOperator]) -> HermitianOperator {
    crate::linalg::tensor_all(ops)
}

/// Two-outcome qubit measurement along a real direction at angle `phi`, with sharpness `eta`.
fn qubit_effects(phi: f64, eta: f64) -> [HermitianOperator; 2] {
    let (c, s) = (phi.cos(), phi.sin());
    let plus = HermitianOperator::hermitize(ComplexMatrix::from_fn(2, 2, |i, j| {
        let n = [[c, s], [s, -c]];
        C64::new(0.5 * (if i == j { 1.0 } else { 0.0 }) + 0.5 * eta * n[i][j], 0.0)
    }));
    let minus = HermitianOperator::identity(2).sub(&plus);
    [plus, minus]
}

/// Uniform bit on A with a noisy classical copy in R and trivial B; X read in the
/// computational basis, single-symbol Y.
pub fn trivial() -> Instance {
    let mut rho = HermitianOperator::zeros(4);
    for x in 0..2 {
        rho.add_scaled(&kron_all(&[&basis(2, x), &basis(2, x)]), 0.5 * 0.85);
        rho.add_scaled(&kron_all(&[&basis(2, x), &basis(2, 1 - x)]), 0.5 * 0.15);
    }
    let povm = JointPOVM::single_axis(syms(&["0", "1"]), vec![basis(2, 0), basis(2, 1)]).unwrap();
    Instance::new(
        Dims { a: 2, b: 1, r: 2 },
        DensityOperator::new(rho).unwrap(),
        povm,
    )
    .unwrap()
}

/// Four classical symbols on A, copied into B; X and Y are the two bits of the symbol.
pub fn classical_commuting() -> Instance {
    let p = [0.4, 0.3, 0.2, 0.1];
    let mut rho = HermitianOperator::zeros(16);
    for (a, &w) in p.iter().enumerate() {
        rho.add_scaled(&kron_all(&[&basis(4, a), &basis(4, a)]), w);
    }
    let elements = (0..4).map(|a| basis(4, a)).collect();
    let povm = JointPOVM::new(syms(&["0", "1"]), syms(&["0", "1"]), elements).unwrap();
    Instance::new(
        Dims { a: 4, b: 4, r: 1 },
        DensityOperator::new(rho).unwrap(),
        povm,
    )
    .unwrap()
}

/// Qubit A correlated with non-orthogonal qubit states on B; a noisy rotated X readout
/// followed by a classical channel to Y.
pub fn qubit_cq() -> Instance {
    let phi0 = ket(&[1.0, 0.0]);
    let phi1 = ket(&[0.6f64.cos(), 0.6f64.sin()]);
    let mut rho = HermitianOperator::zeros(4);
    rho.add_scaled(&kron_all(&[&basis(2, 0), &projector(&phi0)]), 0.55);
    rho.add_scaled(&kron_all(&[&basis(2, 1), &projector(&phi1)]), 0.45);
    let m = qubit_effects(0.3, 0.9);
    let channel = [[0.8, 0.2], [0.25, 0.75]];
    let mut elements = Vec::new();
    for x in 0..2 {
        for y in 0..2 {
            elements.push(m[x].scale(channel[x][y]));
        }
    }
    let povm = JointPOVM::new(syms(&["0", "1"]), syms(&["0", "1"]), elements).unwrap();
    Instance::new(
        Dims { a: 2, b: 2, r: 1 },
        DensityOperator::new(rho).unwrap(),
        povm,
    )
    .unwrap()
}

/// Pure three-qubit state on A, B, R; Λ_{x,y} = √M_x N_y √M_x for two non-commuting readouts.
pub fn qubit_entangled() -> Instance {
    let psi = vec![
        C64::new(0.62, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.2, 0.0),
        C64::new(0.31, 0.0),
        C64::new(0.0, -0.15),
        C64::new(0.25, 0.0),
        C64::new(0.18, 0.22),
        C64::new(0.0, 0.0),
    ];
    let rho = DensityOperator::pure(&psi).unwrap();
    let m = qubit_effects(0.0, 0.85);
    let n = qubit_effects(std::f64::consts::FRAC_PI_3, 0.8);
    let mut elements = Vec::new();
    for mx in &m {
        let root = crate::linalg::matrix_sqrt(mx).unwrap();
        for ny in &n {
            elements.push(ny.congruence(root.matrix()));
        }
    }
    let povm = JointPOVM::new(syms(&["0", "1"]), syms(&["0", "1"]), elements).unwrap();
    Instance::new(Dims { a: 2, b: 2, r: 2 }, rho, povm).unwrap()
}

/// Measurement induced by a four-outcome qubit instrument (weak Z then strong X),
/// on A entangled with B.
pub fn instrument_derived() -> Instance {
    let kz = qubit_effects(0.0, 0.5);
    let kx = qubit_effects(std::f64::consts::FRAC_PI_2, 1.0);
    let mut kraus = Vec::new();
    for z in &kz {
        let rz = crate::linalg::matrix_sqrt(z).unwrap();
        for x in &kx {
            kraus.push(x.matmul(rz.matrix()));
        }
    }
    let inst = Instrument::new(syms(&["+", "-"]), syms(&["+", "-"]), kraus).unwrap();
    let povm = instrument_to_povm(&inst).unwrap();
    let c = 0.3f64;
    let psi = ket(&[c.cos(), 0.0, 0.0, c.sin()]);
    Instance::new(
        Dims { a: 2, b: 2, r: 1 },
        DensityOperator::pure(&psi).unwrap(),
        povm,
    )
    .unwrap()
}

/// Classical source with three X symbols and two Y symbols; B holds a noisy copy of X
/// and R a noisy copy of Y.
pub fn rate_split_showcase() -> Instance {
    let p = [[0.30, 0.05], [0.10, 0.25], [0.05, 0.25]];
    let to_b = [[0.8, 0.2], [0.5, 0.5], [0.15, 0.85]];
    let to_r = [[0.9, 0.1], [0.2, 0.8]];
    let mut rho = HermitianOperator::zeros(6 * 2 * 2);
    for x in 0..3 {
        for y in 0..2 {
            for b in 0..2 {
                for r in 0..2 {
                    let w = p[x][y] * to_b[x][b] * to_r[y][r];
                    rho.add_scaled(&kron_all(&[&basis(6, 2 * x + y), &basis(2, b), &basis(2, r)]), w);
                }
            }
        }
    }
    let elements = (0..6).map(|a| basis(6, a)).collect();
    let povm = JointPOVM::new(syms(&["a", "b", "c"]), syms(&["0", "1"]), elements).unwrap();
    Instance::new(
        Dims { a: 6, b: 2, r: 2 },
        DensityOperator::new(rho).unwrap(),
        povm,
    )
    .unwrap()
}

/// Bundled fixtures by file stem, in the form their files parse back to.
pub fn fixtures() -> Vec<(&'static str, Instance)> {
    let canonical = |i: Instance| Instance::from_json(&i.to_json()).expect("fixture is valid");
    let all = vec![
        ("trivial", trivial()),
        ("classical-commuting", classical_commuting()),
        ("qubit-cq", qubit_cq()),
        ("qubit-entangled", qubit_entangled()),
        ("instrument-derived", instrument_derived()),
        ("rate-split-showcase", rate_split_showcase()),
    ];
    all.into_iter().map(|(n, i)| (n, canonical(i))).collect()
}
