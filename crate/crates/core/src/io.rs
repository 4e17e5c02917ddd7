//! File formats and deterministic serialization.
//!
//! Floats are written with 17 significant digits in scientific notation, so
//! identical values always produce identical bytes and round-trip exactly.

use std::io;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::appell::AppellSystem;
use crate::chaos::{ChaosFunctional, ChaosVector};
use crate::error::{Error, Result};
use crate::measures::{ComponentMeasure, ProductMeasure};
use crate::multi_index::{multi_indices, MultiIndex};
use crate::operators::OperatorKernel;
use crate::tensor::{BiSymTensor, HilbertScale, SymTensor};
use crate::C64;

/// `x` with 17 significant digits, e.g. `1.0000000000000000e-1`.
pub fn format_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

struct CanonicalFormatter {
    inner: serde_json::ser::PrettyFormatter<'static>,
}

impl serde_json::ser::Formatter for CanonicalFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

/// Pretty-printed JSON with fixed float formatting and a trailing newline.
pub fn to_canonical_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let fmt = CanonicalFormatter {
        inner: serde_json::ser::PrettyFormatter::with_indent(b"  "),
    };
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::InvalidArgument(format!("serialization failed: {e}")))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("malformed JSON: {e}")))
}

/// Measure, truncation and scale: everything needed to rebuild a system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub measure: ProductMeasure,
    #[serde(rename = "N")]
    pub order: usize,
    pub weights: Vec<f64>,
}

impl SystemSpec {
    pub fn of(sys: &AppellSystem) -> Self {
        SystemSpec {
            measure: sys.measure().clone(),
            order: sys.order(),
            weights: sys.scale().weights().to_vec(),
        }
    }

    pub fn build(&self) -> Result<Arc<AppellSystem>> {
        AppellSystem::build(self.measure.clone(), self.order, HilbertScale::new(self.weights.clone())?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub alpha: MultiIndex,
    pub value: C64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeBlock {
    pub n: usize,
    pub entries: Vec<TensorEntry>,
}

fn tensor_entries(t: &SymTensor) -> Vec<TensorEntry> {
    t.iter()
        .filter(|(_, v)| v.norm_sqr() != 0.0)
        .map(|(alpha, value)| TensorEntry { alpha, value })
        .collect()
}

fn family_blocks(coeffs: &[SymTensor]) -> Vec<DegreeBlock> {
    coeffs
        .iter()
        .filter(|t| !t.is_zero())
        .map(|t| DegreeBlock {
            n: t.degree(),
            entries: tensor_entries(t),
        })
        .collect()
}

fn family_from_blocks(sys: &AppellSystem, blocks: &[DegreeBlock]) -> Result<Vec<SymTensor>> {
    let d = sys.dim();
    let mut coeffs: Vec<SymTensor> = (0..=sys.order()).map(|n| SymTensor::zeros(d, n)).collect();
    for b in blocks {
        if b.n > sys.order() {
            return Err(Error::DegreeTooHigh {
                degree: b.n,
                max: sys.order(),
            });
        }
        for e in &b.entries {
            if e.alpha.dim() != d || e.alpha.degree() != b.n {
                return Err(Error::InvalidArgument(format!(
                    "index {:?} does not belong to degree {}",
                    e.alpha.entries(),
                    b.n
                )));
            }
            coeffs[b.n].set(&e.alpha, e.value);
        }
    }
    Ok(coeffs)
}

/// Which side of the chaos decomposition a coefficient family lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    /// Test functions `Σ ⟨P_n | φ_n⟩`.
    P,
    /// Distributions `Σ Q_n(Φ_n)`.
    Q,
}

/// JSON form of a [`ChaosVector`] or [`ChaosFunctional`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChaosFile {
    pub d: usize,
    pub system: SystemSpec,
    pub basis: Basis,
    pub coeffs: Vec<DegreeBlock>,
}

impl ChaosFile {
    pub fn from_vector(v: &ChaosVector) -> Self {
        ChaosFile {
            d: v.system().dim(),
            system: SystemSpec::of(v.system()),
            basis: Basis::P,
            coeffs: family_blocks(v.coeffs()),
        }
    }

    pub fn from_functional(f: &ChaosFunctional) -> Self {
        ChaosFile {
            d: f.system().dim(),
            system: SystemSpec::of(f.system()),
            basis: Basis::Q,
            coeffs: family_blocks(f.coeffs()),
        }
    }

    pub fn to_vector(&self) -> Result<ChaosVector> {
        if self.basis != Basis::P {
            return Err(Error::InvalidArgument("file holds a Q-basis functional".into()));
        }
        let sys = self.system.build()?;
        let coeffs = family_from_blocks(&sys, &self.coeffs)?;
        ChaosVector::new(sys, coeffs)
    }

    pub fn to_functional(&self) -> Result<ChaosFunctional> {
        if self.basis != Basis::Q {
            return Err(Error::InvalidArgument("file holds a P-basis vector".into()));
        }
        let sys = self.system.build()?;
        let coeffs = family_from_blocks(&sys, &self.coeffs)?;
        ChaosFunctional::new(sys, coeffs)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelEntry {
    pub gamma: MultiIndex,
    pub delta: MultiIndex,
    pub value: C64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelBlock {
    pub m: usize,
    pub n: usize,
    pub entries: Vec<KernelEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelMeasures {
    #[serde(rename = "in")]
    pub input: Vec<ComponentMeasure>,
    #[serde(rename = "out")]
    pub output: Vec<ComponentMeasure>,
}

/// JSON form of an [`OperatorKernel`]:
/// `{d, N, measures: {in, out}, weights, blocks: [{m, n, entries: [{gamma, delta, value}]}]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelFile {
    pub d: usize,
    #[serde(rename = "N")]
    pub order: usize,
    pub measures: KernelMeasures,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    pub blocks: Vec<KernelBlock>,
}

impl KernelFile {
    pub fn from_kernel(k: &OperatorKernel) -> Result<Self> {
        if k.in_order() != k.out_order() {
            return Err(Error::TruncationMismatch {
                expected: k.out_order(),
                got: k.in_order(),
            });
        }
        let blocks = k
            .nonzero_blocks()
            .map(|b| KernelBlock {
                m: b.out_degree(),
                n: b.in_degree(),
                entries: b
                    .iter()
                    .filter(|(_, _, v)| v.norm_sqr() != 0.0)
                    .map(|(gamma, delta, value)| KernelEntry { gamma, delta, value })
                    .collect(),
            })
            .collect();
        let weights = k.sys_out().scale().weights().to_vec();
        Ok(KernelFile {
            d: k.dim(),
            order: k.out_order(),
            measures: KernelMeasures {
                input: k.sys_in().measure().components().to_vec(),
                output: k.sys_out().measure().components().to_vec(),
            },
            weights: Some(weights),
            blocks,
        })
    }

    pub fn systems(&self) -> Result<(Arc<AppellSystem>, Arc<AppellSystem>)> {
        let scale = match &self.weights {
            Some(w) => HilbertScale::new(w.clone())?,
            None => HilbertScale::default_for(self.d),
        };
        let build = |comps: &[ComponentMeasure]| -> Result<Arc<AppellSystem>> {
            let m = ProductMeasure::new(comps.to_vec())?;
            if m.dim() != self.d {
                return Err(Error::DimensionMismatch {
                    expected: self.d,
                    got: m.dim(),
                });
            }
            AppellSystem::build(m, self.order, scale.clone())
        };
        Ok((build(&self.measures.input)?, build(&self.measures.output)?))
    }

    pub fn to_kernel(&self) -> Result<OperatorKernel> {
        let (sys_in, sys_out) = self.systems()?;
        let mut k = OperatorKernel::zero(sys_in, sys_out)?;
        let mut seen = std::collections::BTreeSet::new();
        for b in &self.blocks {
            if !seen.insert((b.m, b.n)) {
                return Err(Error::InvalidArgument(format!("block ({}, {}) appears twice", b.m, b.n)));
            }
            if b.m > self.order || b.n > self.order {
                return Err(Error::DegreeTooHigh {
                    degree: b.m.max(b.n),
                    max: self.order,
                });
            }
            let mut block = BiSymTensor::zeros(self.d, b.m, b.n);
            for e in &b.entries {
                if e.gamma.dim() != self.d
                    || e.delta.dim() != self.d
                    || e.gamma.degree() != b.m
                    || e.delta.degree() != b.n
                {
                    return Err(Error::InvalidArgument(format!(
                        "entry {:?} x {:?} does not belong to block ({}, {})",
                        e.gamma.entries(),
                        e.delta.entries(),
                        b.m,
                        b.n
                    )));
                }
                block.set(&e.gamma, &e.delta, e.value);
            }
            k.set_block(block)?;
        }
        Ok(k)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelRow {
    pub gamma: MultiIndex,
    pub terms: Vec<TensorEntry>,
}

/// P-kernel tables and the reciprocal Laplace series of a system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AppellTables {
    pub d: usize,
    pub system: SystemSpec,
    pub reciprocal: Vec<TensorEntry>,
    pub p_kernels: Vec<KernelRow>,
}

impl AppellTables {
    pub fn of(sys: &AppellSystem) -> Self {
        let reciprocal = sys
            .reciprocal()
            .iter()
            .filter(|(_, v)| v.norm_sqr() != 0.0)
            .map(|(alpha, value)| TensorEntry {
                alpha,
                value: clean_zero(value),
            })
            .collect();
        let p_kernels = (0..=sys.order())
            .flat_map(|n| multi_indices(sys.dim(), n))
            .map(|gamma| KernelRow {
                terms: sys
                    .kernel_row(&gamma)
                    .into_iter()
                    .filter(|(_, v)| v.norm_sqr() != 0.0)
                    .map(|(alpha, value)| TensorEntry {
                        alpha,
                        value: clean_zero(value),
                    })
                    .collect(),
                gamma,
            })
            .collect();
        AppellTables {
            d: sys.dim(),
            system: SystemSpec::of(sys),
            reciprocal,
            p_kernels,
        }
    }
}

/// Replaces signed zeros by `+0` so equal tables print identically.
fn clean_zero(z: C64) -> C64 {
    C64::new(z.re + 0.0, z.im + 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::OperatorKernel;

    #[test]
    fn float_format_has_17_digits() {
        assert_eq!(format_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(format_f64(1.0), "1.0000000000000000e0");
        assert_eq!(format_f64(-2.5e-300), "-2.5000000000000000e-300");
        for x in [0.1, 1.0 / 3.0, 6.02214076e23, -7.0e-310] {
            assert_eq!(format_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn canonical_json_is_stable_and_parses() {
        let v = serde_json::json!({"a": [0.5, 1e-20], "b": 3});
        let s = to_canonical_json(&v).unwrap();
        assert!(s.contains("5.0000000000000000e-1"));
        assert_eq!(s, to_canonical_json(&v).unwrap());
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["a"][1].as_f64(), Some(1e-20));
    }

    #[test]
    fn kernel_file_round_trip() {
        let g = AppellSystem::standard_gaussian(2, 3);
        let p = AppellSystem::build(
            ProductMeasure::iid(ComponentMeasure::Poisson { rate: 1.0 }, 2).unwrap(),
            3,
            HilbertScale::default_for(2),
        )
        .unwrap();
        let k = OperatorKernel::measure_change(p, g).unwrap();
        let file = KernelFile::from_kernel(&k).unwrap();
        let text = to_canonical_json(&file).unwrap();
        assert!(text.contains("\"N\": 3"));
        let back: KernelFile = from_json(&text).unwrap();
        assert_eq!(back.to_kernel().unwrap(), k);
    }

    #[test]
    fn kernel_file_rejects_bad_blocks() {
        let text = r#"{"d": 1, "N": 2, "measures": {"in": [{"kind": "gaussian", "mean": 0.0, "variance": 1.0}],
            "out": [{"kind": "gaussian", "mean": 0.0, "variance": 1.0}]},
            "blocks": [{"m": 1, "n": 1, "entries": [{"gamma": [2], "delta": [1], "value": [1.0, 0.0]}]}]}"#;
        let file: KernelFile = from_json(text).unwrap();
        assert!(file.to_kernel().is_err());
        assert!(from_json::<KernelFile>("{\"d\": 1}").is_err());
    }

    #[test]
    fn chaos_file_round_trip() {
        let sys = AppellSystem::standard_gaussian(1, 4);
        let r = sys.rho(&[C64::new(0.5, 0.0)]).unwrap();
        let file = ChaosFile::from_functional(&r);
        let back: ChaosFile = from_json(&to_canonical_json(&file).unwrap()).unwrap();
        assert_eq!(back.to_functional().unwrap(), r);
        assert!(back.to_vector().is_err());
    }

    #[test]
    fn appell_tables_list_hermite_rows() {
        let sys = AppellSystem::standard_gaussian(1, 2);
        let t = AppellTables::of(&sys);
        let row = &t.p_kernels[2];
        assert_eq!(row.gamma, MultiIndex::new(vec![2]));
        let terms: Vec<(u32, f64)> = row.terms.iter().map(|e| (e.alpha.entries()[0], e.value.re)).collect();
        assert_eq!(terms, vec![(0, -1.0), (2, 1.0)]);
    }
}
