//! JSON form of a series, one entry per (monomial, generator) term in
//! print order. Field order is fixed so output can be diffed.

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::Mode;
use crate::coeff::{fmt_rational, Coefficient, Kernel, Monomial, Rational};
use crate::observables::{Generator, Series, Slot};

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Error)]
pub enum SerialError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format version {0}")]
    Version(String),
    #[error("invalid rational `{0}`")]
    Rational(String),
    #[error("half-integer eps power in `{0}` cannot be serialized")]
    HalfInteger(String),
    #[error("invalid generator: {0}")]
    Generator(#[from] crate::observables::ObservableError),
    #[error("kernel entry needs both arguments or neither")]
    KernelArgs,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub version: String,
    pub mode: String,
    pub colors: Option<u8>,
    pub truncated: bool,
    pub terms: Vec<TermDoc>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq, Eq)]
pub struct TermDoc {
    pub coeff: CoeffDoc,
    pub generator: GeneratorDoc,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq, Eq)]
pub struct CoeffDoc {
    pub rational: String,
    pub eps: i32,
    pub hbar: u32,
    pub s: Vec<u32>,
    pub kernels: Vec<KernelDoc>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq, Eq)]
pub struct KernelDoc {
    pub name: String,
    pub a: Option<String>,
    pub b: Option<String>,
    pub pow: u32,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq, Eq)]
pub struct GeneratorDoc {
    pub traces: Vec<Vec<SlotDoc>>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq, Eq)]
pub struct SlotDoc {
    pub label: String,
    pub conj: bool,
    pub color: Option<u8>,
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Matrix => "matrix",
        Mode::Kernel => "kernel",
    }
}

fn monomial_doc(r: &Rational, m: &Monomial) -> Result<CoeffDoc, SerialError> {
    if m.eps_half() % 2 != 0 {
        return Err(SerialError::HalfInteger(m.to_string()));
    }
    Ok(CoeffDoc {
        rational: fmt_rational(r),
        eps: m.eps_half() / 2,
        hbar: m.hbar_pow(),
        s: m.s_pows().to_vec(),
        kernels: m
            .kernels()
            .iter()
            .map(|(k, p)| match k {
                Kernel::Scalar(name) => KernelDoc {
                    name: name.clone(),
                    a: None,
                    b: None,
                    pow: *p,
                },
                Kernel::Pair { name, first, second } => KernelDoc {
                    name: name.clone(),
                    a: Some(first.clone()),
                    b: Some(second.clone()),
                    pow: *p,
                },
            })
            .collect(),
    })
}

pub fn to_document(s: &Series, mode: Mode, colors: Option<u8>) -> Result<Document, SerialError> {
    let terms = s
        .flat_terms()
        .into_iter()
        .map(|(r, m, g)| {
            Ok(TermDoc {
                coeff: monomial_doc(r, m)?,
                generator: GeneratorDoc {
                    traces: g
                        .traces()
                        .iter()
                        .map(|t| {
                            t.slots()
                                .iter()
                                .map(|x| SlotDoc {
                                    label: x.label.clone(),
                                    conj: x.conjugated,
                                    color: x.color,
                                })
                                .collect()
                        })
                        .collect(),
                },
            })
        })
        .collect::<Result<_, SerialError>>()?;
    Ok(Document {
        version: FORMAT_VERSION.into(),
        mode: mode_name(mode).into(),
        colors,
        truncated: s.truncated,
        terms,
    })
}

pub fn to_json(s: &Series, mode: Mode, colors: Option<u8>) -> Result<String, SerialError> {
    Ok(serde_json::to_string_pretty(&to_document(s, mode, colors)?)?)
}

fn parse_rational(text: &str) -> Result<Rational, SerialError> {
    let bad = || SerialError::Rational(text.into());
    let (n, d) = match text.split_once('/') {
        Some((n, d)) => (n, d),
        None => (text, "1"),
    };
    let n: BigInt = n.parse().map_err(|_| bad())?;
    let d: BigInt = d.parse().map_err(|_| bad())?;
    if d == BigInt::from(0) {
        return Err(bad());
    }
    Ok(Rational::new(n, d))
}

pub fn from_document(doc: &Document) -> Result<Series, SerialError> {
    if doc.version != FORMAT_VERSION {
        return Err(SerialError::Version(doc.version.clone()));
    }
    let mut s = Series::zero();
    s.truncated = doc.truncated;
    for t in &doc.terms {
        let mut m = &Monomial::eps(t.coeff.eps) * &Monomial::hbar(t.coeff.hbar);
        for (k, p) in t.coeff.s.iter().enumerate() {
            m.set_s(k as u8 + 1, *p);
        }
        for k in &t.coeff.kernels {
            let kernel = match (&k.a, &k.b) {
                (None, None) => Kernel::scalar(&k.name),
                (Some(a), Some(b)) => Kernel::pair(&k.name, a, b),
                _ => return Err(SerialError::KernelArgs),
            };
            m.mul_kernel(kernel, k.pow);
        }
        let g = Generator::new(
            t.generator
                .traces
                .iter()
                .map(|w| {
                    w.iter()
                        .map(|x| Slot {
                            label: x.label.clone(),
                            conjugated: x.conj,
                            color: x.color,
                        })
                        .collect()
                })
                .collect(),
        )?;
        s.add_term(Coefficient::term(parse_rational(&t.coeff.rational)?, m), g);
    }
    Ok(s)
}

pub fn from_json(text: &str) -> Result<Series, SerialError> {
    from_document(&serde_json::from_str(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_series;

    #[test]
    fn round_trip() {
        let s = parse_series("3/2*eps^2*hbar*s1*K(x1,~y2)^2*W{Tr[x1@1 ~x2@2] Tr[x3@1]} - g*W{}").unwrap();
        let text = to_json(&s, Mode::Kernel, Some(2)).unwrap();
        assert_eq!(from_json(&text).unwrap(), s);
        let doc: Document = serde_json::from_str(&text).unwrap();
        assert_eq!(doc.version, "1");
        assert_eq!(doc.terms.len(), 2);
        assert_eq!(doc.terms[0].coeff.rational, "-1");
    }

    #[test]
    fn fixed_field_order() {
        let text = serde_json::to_string(&to_document(&Series::unit(), Mode::Matrix, None).unwrap()).unwrap();
        assert_eq!(
            text,
            r#"{"version":"1","mode":"matrix","colors":null,"truncated":false,"terms":[{"coeff":{"rational":"1","eps":0,"hbar":0,"s":[],"kernels":[]},"generator":{"traces":[]}}]}"#
        );
    }

    #[test]
    fn rejects_bad_input() {
        assert!(from_json("{").is_err());
        assert!(parse_rational("1/0").is_err());
        let mut doc = to_document(&Series::unit(), Mode::Matrix, None).unwrap();
        doc.version = "2".into();
        assert!(matches!(from_document(&doc), Err(SerialError::Version(_))));
        let half = Series::scalar(Coefficient::monomial(Monomial::eps_half_units(1)));
        assert!(to_json(&half, Mode::Matrix, None).is_err());
    }
}
