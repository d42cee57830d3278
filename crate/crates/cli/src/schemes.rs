use std::path::Path;

use anyhow::{Context, Result};

use srj_core::catalog::{self, CatalogKey, Listing};
use srj_core::{chebyshev_scheme, Error, Ratio, Scheme};

pub struct ResolvedScheme {
    pub scheme: Scheme,
    /// How the scheme was obtained, recorded in CSV metadata.
    pub source: String,
}

fn order(s: &str, what: &str) -> Result<u32> {
    let m: u32 = s
        .trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("{what} needs a positive integer M, got {s:?}")))?;
    if m == 0 {
        return Err(Error::InvalidArgument(format!("{what} needs M >= 1")).into());
    }
    Ok(m)
}

/// Resolve `catalog:M,c`, `legacy:M`, `jacobi:M`, `chebyshev:M`, or a path to
/// a scheme file.
pub fn resolve_scheme(reference: &str) -> Result<ResolvedScheme> {
    if let Some(key) = reference.strip_prefix("catalog:") {
        let (m, c) = catalog::parse_key(key)?;
        let scheme = catalog::lookup_mc(m, c)?;
        return Ok(ResolvedScheme {
            scheme,
            source: format!("bundled catalog, M={m}, c={c}, factors in published order"),
        });
    }
    if let Some(m) = reference.strip_prefix("legacy:") {
        let m = order(m, "legacy")?;
        let scheme = catalog::lookup(CatalogKey {
            m,
            c: Ratio::ZERO,
            listing: Listing::RealAxis,
        })?;
        return Ok(ResolvedScheme {
            scheme,
            source: format!("bundled real-axis listing, M={m}"),
        });
    }
    if let Some(m) = reference.strip_prefix("jacobi:") {
        let m = order(m, "jacobi")?;
        return Ok(ResolvedScheme {
            scheme: Scheme::jacobi(m as usize),
            source: format!("plain Jacobi, {m} unit factors per cycle"),
        });
    }
    if let Some(m) = reference.strip_prefix("chebyshev:") {
        let m = order(m, "chebyshev")?;
        return Ok(ResolvedScheme {
            scheme: chebyshev_scheme(m),
            source: format!("closed-form real-axis scheme, M={m}"),
        });
    }
    let path = Path::new(reference);
    let file = catalog::load_scheme_file(path).with_context(|| format!("loading scheme file {reference}"))?;
    if !file.converged {
        eprintln!("warning: {reference} was written by a derivation that did not converge");
    }
    Ok(ResolvedScheme {
        scheme: file.scheme,
        source: format!("file {reference}{}", if file.converged { "" } else { " (converged=false)" }),
    })
}
