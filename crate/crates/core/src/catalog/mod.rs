//! Bundled schemes, lookup, and the on-disk scheme file format.

mod data;

use std::fmt::Write as _;
use std::path::Path;

use crate::amplification::Scheme;
use crate::error::{Error, Result};
use crate::ratio::Ratio;
use crate::region::make_region;

/// Which published listing a scheme comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Listing {
    /// Full grid: M = 2..=20 for each ratio in [`Ratio::grid`].
    Grid,
    /// Shorter real-axis listing (M = 1, 2, 3, 5, 7; c = 0).
    RealAxis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CatalogKey {
    pub m: u32,
    pub c: Ratio,
    pub listing: Listing,
}

impl CatalogKey {
    pub fn grid(m: u32, c: Ratio) -> Self {
        CatalogKey {
            m,
            c,
            listing: Listing::Grid,
        }
    }
}

fn not_found(m: u32, c: Ratio) -> Error {
    Error::NotInCatalog {
        m: m as usize,
        c: c.to_string(),
    }
}

/// Max `|G|` over the `(m, c)` test points of `scheme`.
pub fn bound_on_test_points(scheme: &Scheme, c: Ratio) -> Result<f64> {
    let region = make_region(scheme.m() as u32, c.value())?;
    Ok(region
        .test_points()
        .into_iter()
        .map(|z| scheme.amplification(z).norm())
        .fold(0.0, f64::max))
}

fn finish(factors: &[f64], c: Ratio) -> Result<Scheme> {
    let s = Scheme::new(factors.to_vec())?.with_c_ratio(c);
    let g = bound_on_test_points(&s, c)?;
    s.with_g_bar(g)
}

/// Scheme for `key`, in published order, with `g` recomputed from its test points.
pub fn lookup(key: CatalogKey) -> Result<Scheme> {
    let factors = match key.listing {
        Listing::Grid => data::GRID
            .iter()
            .find(|&&(m, p, q, _)| m == key.m && Ratio::new(p, q) == key.c)
            .map(|e| e.3),
        Listing::RealAxis if key.c.is_zero() => data::REAL_AXIS.iter().find(|e| e.0 == key.m).map(|e| e.1),
        Listing::RealAxis => None,
    };
    let factors = factors.ok_or_else(|| not_found(key.m, key.c))?;
    finish(factors, key.c)
}

/// Grid scheme for `(m, c)`, falling back to the real-axis listing where the
/// grid has no entry (only `M = 1`).
pub fn lookup_mc(m: u32, c: Ratio) -> Result<Scheme> {
    lookup(CatalogKey::grid(m, c)).or_else(|_| {
        lookup(CatalogKey {
            m,
            c,
            listing: Listing::RealAxis,
        })
        .map_err(|_| not_found(m, c))
    })
}

/// Every catalog key, grid rows first (ascending c, then M).
pub fn keys() -> Vec<CatalogKey> {
    let mut keys: Vec<CatalogKey> = data::GRID
        .iter()
        .map(|&(m, p, q, _)| CatalogKey::grid(m, Ratio::new(p, q)))
        .collect();
    keys.extend(data::REAL_AXIS.iter().map(|&(m, _)| CatalogKey {
        m,
        c: Ratio::ZERO,
        listing: Listing::RealAxis,
    }));
    keys
}

/// Parse `M,c` as used by `catalog:5,1/3` scheme references.
pub fn parse_key(s: &str) -> Result<(u32, Ratio)> {
    let (m, c) = s
        .split_once(',')
        .ok_or_else(|| Error::InvalidArgument(format!("catalog key {s:?} must look like M,c (e.g. 5,1/3)")))?;
    let m: u32 = m
        .trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad M in catalog key {s:?}")))?;
    Ok((m, c.parse()?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeRow {
    pub m: u32,
    /// One slope per ratio in [`Ratio::grid`].
    pub slopes: [f64; 5],
    pub jacobi: f64,
}

/// `G'(1)` for every grid scheme, with the all-ones column.
pub fn slope_table() -> Vec<SlopeRow> {
    (2..=20)
        .map(|m| {
            let mut slopes = [0.0; 5];
            for (slot, c) in slopes.iter_mut().zip(Ratio::grid()) {
                *slot = lookup(CatalogKey::grid(m, c)).expect("grid is complete").slope_at_one();
            }
            SlopeRow {
                m,
                slopes,
                jacobi: Scheme::jacobi(m as usize).slope_at_one(),
            }
        })
        .collect()
}

const HEADER: &str = "srj-scheme v1";

/// A parsed scheme file.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeFile {
    pub scheme: Scheme,
    /// False when the file was written from a non-converged derivation.
    pub converged: bool,
}

pub fn format_scheme(scheme: &Scheme, converged: bool) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{HEADER}");
    let _ = writeln!(s, "m={}", scheme.m());
    match scheme.c_ratio() {
        Some(c) => {
            let _ = writeln!(s, "c={c}");
        }
        None => s.push_str("c=none\n"),
    }
    match scheme.g_bar() {
        Some(g) => {
            let _ = writeln!(s, "g_bar={g:.16e}");
        }
        None => s.push_str("g_bar=none\n"),
    }
    if !converged {
        s.push_str("converged=false\n");
    }
    for w in scheme.factors() {
        let _ = writeln!(s, "{w:.16e}");
    }
    s
}

pub fn parse_scheme(text: &str, path: Option<&Path>) -> Result<SchemeFile> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.map(Path::to_path_buf),
        line,
        message: msg,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    match lines.next() {
        Some((_, HEADER)) => {}
        Some((n, other)) => return Err(err(n, format!("expected header {HEADER:?}, found {other:?}"))),
        None => return Err(err(0, "empty scheme file".into())),
    }

    let mut m: Option<usize> = None;
    let mut c: Option<Ratio> = None;
    let mut g_bar: Option<f64> = None;
    let mut converged = true;
    let mut factors = Vec::new();
    for (n, line) in lines {
        if let Some((key, value)) = line.split_once('=') {
            let value = value.trim();
            match key.trim() {
                "m" => {
                    let v: usize = value.parse().map_err(|_| err(n, format!("field m: bad integer {value:?}")))?;
                    if v == 0 {
                        return Err(Error::Validation(format!("line {n}: m must be at least 1")));
                    }
                    m = Some(v);
                }
                "c" if value == "none" => c = None,
                "c" => c = Some(value.parse().map_err(|e| err(n, format!("field c: {e}")))?),
                "g_bar" if value == "none" => g_bar = None,
                "g_bar" => {
                    g_bar = Some(value.parse().map_err(|_| err(n, format!("field g_bar: bad number {value:?}")))?)
                }
                "converged" => {
                    converged = value
                        .parse()
                        .map_err(|_| err(n, format!("field converged: expected true or false, got {value:?}")))?
                }
                other => return Err(err(n, format!("unknown field {other:?}"))),
            }
            continue;
        }
        let w: f64 = line.parse().map_err(|_| err(n, format!("bad factor {line:?}")))?;
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::Validation(format!("line {n}: factor {w} must be finite and positive")));
        }
        factors.push(w);
    }
    let m = m.ok_or_else(|| err(0, "missing field m".into()))?;
    if factors.len() != m {
        return Err(err(0, format!("m={m} but {} factors listed", factors.len())));
    }
    let mut scheme = Scheme::new(factors)?;
    if let Some(c) = c {
        scheme = scheme.with_c_ratio(c);
    }
    if let Some(g) = g_bar {
        scheme = scheme.with_g_bar(g)?;
    }
    Ok(SchemeFile { scheme, converged })
}

pub fn save_scheme(scheme: &Scheme, path: &Path) -> Result<()> {
    save_scheme_with_status(scheme, true, path)
}

pub fn save_scheme_with_status(scheme: &Scheme, converged: bool, path: &Path) -> Result<()> {
    std::fs::write(path, format_scheme(scheme, converged))?;
    Ok(())
}

pub fn load_scheme(path: &Path) -> Result<Scheme> {
    Ok(load_scheme_file(path)?.scheme)
}

pub fn load_scheme_file(path: &Path) -> Result<SchemeFile> {
    let text = std::fs::read_to_string(path)?;
    parse_scheme(&text, Some(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_complete() {
        assert_eq!(data::GRID.len(), 95);
        for c in Ratio::grid() {
            for m in 2..=20 {
                let s = lookup(CatalogKey::grid(m, c)).unwrap();
                assert_eq!(s.m(), m as usize);
                assert_eq!(s.c_ratio(), Some(c));
            }
        }
        assert_eq!(keys().len(), 100);
    }

    #[test]
    fn lookup_examples() {
        let s = lookup_mc(3, Ratio::ZERO).unwrap();
        assert_eq!(s.factors(), &[3.49402001, 0.53277775, 0.9245737]);
        let s = lookup_mc(2, Ratio::new(1, 2)).unwrap();
        assert_eq!(s.factors(), &[0.59563557, 1.50541872]);
        let s = lookup_mc(20, Ratio::new(1, 5)).unwrap();
        assert_eq!(s.m(), 20);
        assert_eq!(s.factors()[0], 0.57288937);
    }

    #[test]
    fn real_axis_listing_is_keyed_separately() {
        let legacy = lookup(CatalogKey {
            m: 2,
            c: Ratio::ZERO,
            listing: Listing::RealAxis,
        })
        .unwrap();
        assert_eq!(legacy.factors(), &[1.70710678, 0.56903559]);
        assert_eq!(lookup_mc(2, Ratio::ZERO).unwrap().factors(), &[0.5690356, 1.70710677]);
        let m1 = lookup_mc(1, Ratio::ZERO).unwrap();
        assert_eq!(m1.factors(), &[0.66666667]);
        assert!(lookup_mc(1, Ratio::new(1, 2)).is_err());
    }

    #[test]
    fn unknown_keys_report_grid() {
        let e = lookup_mc(21, Ratio::ZERO).unwrap_err();
        assert!(matches!(e, Error::NotInCatalog { m: 21, .. }));
        assert!(e.to_string().contains("1/10"));
        assert!(lookup_mc(5, Ratio::new(1, 4)).is_err());
    }

    #[test]
    fn recomputed_bound_is_below_one() {
        for key in keys() {
            let s = lookup(key).unwrap();
            let g = s.g_bar().unwrap();
            assert!(g < 1.0, "{key:?}");
            for z in make_region(key.m, key.c.value()).unwrap().test_points() {
                assert!(s.amplification(z).norm() <= g);
            }
        }
    }

    #[test]
    fn parse_key_examples() {
        assert_eq!(parse_key("5,1/3").unwrap(), (5, Ratio::new(1, 3)));
        assert_eq!(parse_key("2, 0").unwrap(), (2, Ratio::ZERO));
        assert!(parse_key("5").is_err());
        assert!(parse_key("x,0").is_err());
    }

    #[test]
    fn slope_table_shape() {
        let t = slope_table();
        assert_eq!(t.len(), 19);
        assert_eq!(t[11].m, 13);
        assert_eq!(t[11].jacobi, 13.0);
        for row in &t {
            assert!(row.slopes.windows(2).all(|w| w[0] > w[1]));
            assert!(row.slopes.iter().all(|&s| s > row.jacobi));
        }
    }

    #[test]
    fn scheme_file_round_trip() {
        let s = lookup_mc(5, Ratio::new(1, 3)).unwrap();
        let text = format_scheme(&s, true);
        let back = parse_scheme(&text, None).unwrap();
        assert!(back.converged);
        assert_eq!(back.scheme, s);

        let odd = Scheme::new(vec![0.1 + 0.2, std::f64::consts::PI, 1e-300_f64.max(1e-7)]).unwrap();
        let back = parse_scheme(&format_scheme(&odd, false), None).unwrap();
        assert!(!back.converged);
        assert_eq!(back.scheme.factors(), odd.factors());
        assert_eq!(back.scheme.c_ratio(), None);
    }

    #[test]
    fn scheme_file_errors() {
        let neg = "srj-scheme v1\nm=2\nc=0\ng_bar=none\n1.5\n-0.5\n";
        assert!(matches!(parse_scheme(neg, None), Err(Error::Validation(_))));
        let zero_m = "srj-scheme v1\nm=0\nc=0\ng_bar=none\n";
        assert!(matches!(parse_scheme(zero_m, None), Err(Error::Validation(_))));
        let bad_header = "srj v2\nm=1\n1.0\n";
        assert!(matches!(parse_scheme(bad_header, None), Err(Error::Parse { line: 1, .. })));
        let bad_field = "srj-scheme v1\nm=1\nc=abc\n1.0\n";
        assert!(matches!(parse_scheme(bad_field, None), Err(Error::Parse { line: 3, .. })));
        let short = "srj-scheme v1\nm=3\n1.0\n2.0\n";
        assert!(parse_scheme(short, None).is_err());
        let junk = "srj-scheme v1\nm=1\nfoo\n";
        assert!(matches!(parse_scheme(junk, None), Err(Error::Parse { line: 3, .. })));
    }
}
