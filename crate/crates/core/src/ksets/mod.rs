//! Direction sets in exact ℚ(√2) coordinates, their orthogonality structure
//! and the tripod colourability problem.

mod q2;
mod search;
mod theorem1;

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Serialize, Serializer};

use crate::colouring::Colour;
use crate::error::{Error, Result};

pub use q2::Q2Scalar;
pub use search::{
    colourability_search, colourability_search_with_order, enumerate_colourings, ColourabilityVerdict,
    SearchCertificate,
};
pub use theorem1::{theorem1_demonstration, theorem1_on_set, Theorem1Report, TriadDerivation};

/// A ray in ℝ³ with ℚ(√2) coordinates, stored canonically: the first
/// nonzero component is scaled to exactly 1.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ExactRay {
    components: [Q2Scalar; 3],
}

impl ExactRay {
    pub fn new(components: [Q2Scalar; 3]) -> Result<Self> {
        let pivot = components
            .iter()
            .find(|c| !c.is_zero())
            .ok_or_else(|| Error::validation("ray must have a nonzero component"))?
            .inverse()
            .expect("nonzero");
        Ok(ExactRay {
            components: components.map(|c| &c * &pivot),
        })
    }

    pub fn from_ints(x: i64, y: i64, z: i64) -> Result<Self> {
        ExactRay::new([x, y, z].map(|v| Q2Scalar::from_ints(v, 0)))
    }

    pub fn components(&self) -> &[Q2Scalar; 3] {
        &self.components
    }

    pub fn dot(&self, other: &ExactRay) -> Q2Scalar {
        self.components
            .iter()
            .zip(&other.components)
            .fold(Q2Scalar::zero(), |acc, (a, b)| &acc + &(a * b))
    }

    pub fn is_orthogonal(&self, other: &ExactRay) -> bool {
        self.dot(other).is_zero()
    }

    /// Unit vector in floating point, for display and numerics.
    pub fn to_f64(&self) -> [f64; 3] {
        let v = self.components.each_ref().map(Q2Scalar::to_f64);
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.map(|x| x / n)
    }
}

impl fmt::Display for ExactRay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [x, y, z] = &self.components;
        write!(f, "{x} {y} {z}")
    }
}

impl fmt::Debug for ExactRay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({self})")
    }
}

impl Serialize for ExactRay {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let parts: Vec<String> = self.components.iter().map(|c| c.to_string()).collect();
        parts.serialize(s)
    }
}

/// A finite set of rays together with every orthogonal pair and every
/// mutually orthogonal triple among them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KsSet {
    pub name: String,
    pub rays: Vec<ExactRay>,
    pub pairs: Vec<(usize, usize)>,
    pub triads: Vec<(usize, usize, usize)>,
}

impl KsSet {
    /// Builds the set, computing pairs and triads exactly.
    pub fn from_rays(name: impl Into<String>, rays: Vec<ExactRay>) -> Result<Self> {
        let mut seen = HashMap::new();
        for (i, r) in rays.iter().enumerate() {
            if let Some(j) = seen.insert(r.clone(), i) {
                return Err(Error::DataIntegrity(format!(
                    "rays {j} and {i} are the same ray ({r})"
                )));
            }
        }
        let (pairs, triads) = orthogonality_structure(&rays);
        Ok(KsSet {
            name: name.into(),
            rays,
            pairs,
            triads,
        })
    }

    /// Parses the text format: one ray per line, three coordinates each,
    /// `#` starts a comment.
    pub fn parse(name: impl Into<String>, text: &str) -> Result<Self> {
        let rays = parse_rays(text)?;
        let set = KsSet::from_rays(name, rays)?;
        set.verify()?;
        Ok(set)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::validation(format!("cannot read {}: {e}", path.display())))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "file".into());
        KsSet::parse(name, &text)
    }

    pub fn empty(name: impl Into<String>) -> Self {
        KsSet {
            name: name.into(),
            rays: Vec::new(),
            pairs: Vec::new(),
            triads: Vec::new(),
        }
    }

    /// Re-checks every stored pair and triad and that the triad list is
    /// complete.
    pub fn verify(&self) -> Result<()> {
        let n = self.rays.len();
        let orth = |i: usize, j: usize| -> Result<bool> {
            if i >= n || j >= n || i == j {
                return Err(Error::DataIntegrity(format!("bad ray indices ({i}, {j})")));
            }
            Ok(self.rays[i].is_orthogonal(&self.rays[j]))
        };
        for &(i, j) in &self.pairs {
            if !orth(i, j)? {
                return Err(Error::DataIntegrity(format!("pair ({i}, {j}) is not orthogonal")));
            }
        }
        for &(i, j, k) in &self.triads {
            if !(orth(i, j)? && orth(i, k)? && orth(j, k)?) {
                return Err(Error::DataIntegrity(format!(
                    "triad ({i}, {j}, {k}) is not mutually orthogonal"
                )));
            }
        }
        let (pairs, triads) = orthogonality_structure(&self.rays);
        if pairs != self.pairs || triads != self.triads {
            return Err(Error::DataIntegrity(format!(
                "stored structure of `{}` differs from recomputation ({} vs {} pairs, {} vs {} triads)",
                self.name,
                self.pairs.len(),
                pairs.len(),
                self.triads.len(),
                triads.len()
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rays.is_empty()
    }
}

type Structure = (Vec<(usize, usize)>, Vec<(usize, usize, usize)>);

fn orthogonality_structure(rays: &[ExactRay]) -> Structure {
    let n = rays.len();
    let mut adj = vec![vec![false; n]; n];
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rays[i].is_orthogonal(&rays[j]) {
                adj[i][j] = true;
                adj[j][i] = true;
                pairs.push((i, j));
            }
        }
    }
    let mut triads = Vec::new();
    for &(i, j) in &pairs {
        for (k, (&ik, &jk)) in adj[i].iter().zip(&adj[j]).enumerate().skip(j + 1) {
            if ik && jk {
                triads.push((i, j, k));
            }
        }
    }
    (pairs, triads)
}

fn parse_rays(text: &str) -> Result<Vec<ExactRay>> {
    let mut rays = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 3 coordinates, found {}", fields.len()),
            });
        }
        let mut comps = Vec::with_capacity(3);
        for f in fields {
            comps.push(f.parse::<Q2Scalar>().map_err(|message| Error::Parse { line: line_no, message })?);
        }
        let comps: [Q2Scalar; 3] = comps.try_into().expect("three fields");
        let ray = ExactRay::new(comps).map_err(|_| Error::Parse {
            line: line_no,
            message: "zero vector is not a ray".into(),
        })?;
        rays.push(ray);
    }
    Ok(rays)
}

const REGISTRY: [(&str, &str); 3] = [
    ("peres33", include_str!("../../data/peres33.rays")),
    ("coordinate-triad", include_str!("../../data/coordinate_triad.rays")),
    ("demo-colourable", include_str!("../../data/demo_colourable.rays")),
];

/// Names accepted by [`load_ks_set`].
pub fn registry_names() -> Vec<&'static str> {
    REGISTRY.iter().map(|(n, _)| *n).collect()
}

/// Loads and verifies a built-in ray set.
pub fn load_ks_set(name: &str) -> Result<KsSet> {
    let text = REGISTRY
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| Error::Lookup {
            kind: "ray set",
            name: name.to_string(),
        })?;
    KsSet::parse(name, text)
}

/// Whether a total AT/AF assignment gives every triad exactly one AT and
/// every orthogonal pair at most one.
pub fn verify_colouring(ks: &KsSet, assignment: &[Colour]) -> Result<bool> {
    if assignment.len() != ks.rays.len() {
        return Err(Error::validation(format!(
            "assignment covers {} of {} rays",
            assignment.len(),
            ks.rays.len()
        )));
    }
    if let Some(i) = assignment.iter().position(|c| *c == Colour::Uncoloured) {
        return Err(Error::validation(format!("ray {i} is uncoloured")));
    }
    let at = |i: usize| assignment[i] == Colour::AT;
    let pairs_ok = ks.pairs.iter().all(|&(i, j)| !(at(i) && at(j)));
    let triads_ok = ks
        .triads
        .iter()
        .all(|&(i, j, k)| [i, j, k].into_iter().filter(|&r| at(r)).count() == 1);
    Ok(pairs_ok && triads_ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ray(s: &str) -> ExactRay {
        let c: Vec<Q2Scalar> = s.split_whitespace().map(|t| t.parse().unwrap()).collect();
        ExactRay::new(c.try_into().unwrap()).unwrap()
    }

    #[test]
    fn canonical_form_is_projective() {
        let r = ray("0 -2 2*sqrt2");
        assert_eq!(r.to_string(), "0 1 -1*sqrt2");
        assert_eq!(ray("0 2 -2*sqrt2"), r);
        assert_eq!(ExactRay::new(r.components().clone()).unwrap(), r);
        assert!(ExactRay::from_ints(0, 0, 0).is_err());
    }

    #[test]
    fn registry_sets_load() {
        let t = load_ks_set("coordinate-triad").unwrap();
        assert_eq!((t.rays.len(), t.pairs.len(), t.triads.len()), (3, 3, 1));
        let p = load_ks_set("peres33").unwrap();
        assert_eq!((p.rays.len(), p.pairs.len(), p.triads.len()), (33, 72, 16));
        let allowed = ["0", "1", "-1", "1*sqrt2", "-1*sqrt2"];
        // Stored rays are scaled multiples of the classic coordinates; check
        // the raw file instead.
        for line in include_str!("../../data/peres33.rays").lines().filter(|l| !l.starts_with('#')) {
            for f in line.split_whitespace() {
                let v: Q2Scalar = f.parse().unwrap();
                assert!(allowed.contains(&v.to_string().as_str()), "{f}");
            }
        }
        let d = load_ks_set("demo-colourable").unwrap();
        assert!(!d.triads.is_empty());
        assert!(matches!(load_ks_set("nope"), Err(Error::Lookup { .. })));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = KsSet::parse("x", "# c\n1 0 0\n1 0\n").unwrap_err();
        assert_eq!(err, Error::Parse { line: 3, message: "expected 3 coordinates, found 2".into() });
        assert!(matches!(KsSet::parse("x", "1 0 q"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(KsSet::parse("x", "0 0 0"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(KsSet::parse("x", "1 0 0\n-2 0 0"), Err(Error::DataIntegrity(_))));
    }

    #[test]
    fn verify_detects_tampering() {
        let mut t = load_ks_set("coordinate-triad").unwrap();
        t.triads.clear();
        assert!(matches!(t.verify(), Err(Error::DataIntegrity(_))));
        let mut t = load_ks_set("coordinate-triad").unwrap();
        t.pairs[0] = (0, 0);
        assert!(matches!(t.verify(), Err(Error::DataIntegrity(_))));
    }

    #[test]
    fn verify_colouring_examples() {
        use Colour::*;
        let t = load_ks_set("coordinate-triad").unwrap();
        assert!(verify_colouring(&t, &[AT, AF, AF]).unwrap());
        assert!(!verify_colouring(&t, &[AT, AT, AF]).unwrap());
        assert!(!verify_colouring(&t, &[AF, AF, AF]).unwrap());
        assert!(verify_colouring(&t, &[AT, AF]).is_err());
        assert!(verify_colouring(&t, &[AT, AF, Uncoloured]).is_err());
    }
}
