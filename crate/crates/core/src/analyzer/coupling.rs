//! Import-based coupling: efferent coupling (fan-out) counts the distinct
//! internal files a file imports, afferent coupling (fan-in) counts the
//! distinct internal files importing it. Imports that do not resolve
//! inside the provided file set are ignored.

use std::collections::{BTreeMap, BTreeSet};

/// Pull `import a.b.C;` / `import a.b.*;` specifiers out of a source text.
/// `import static a.b.C.member;` contributes the enclosing type `a.b.C`.
pub fn extract_imports(text: &str) -> Vec<String> {
    let mut specs = Vec::new();
    for line in text.lines() {
        let line = line.trim_start();
        let Some(rest) = line.strip_prefix("import") else {
            continue;
        };
        if !rest.starts_with(char::is_whitespace) {
            continue;
        }
        let mut rest = rest.trim_start();
        let is_static = if let Some(r) = rest.strip_prefix("static") {
            if r.starts_with(char::is_whitespace) {
                rest = r.trim_start();
                true
            } else {
                false
            }
        } else {
            false
        };
        let spec: String = rest
            .chars()
            .take_while(|c| c.is_alphanumeric() || *c == '.' || *c == '_' || *c == '$' || *c == '*')
            .collect();
        let spec = spec.trim_end_matches('.').to_string();
        if spec.is_empty() {
            continue;
        }
        if is_static {
            // Drop the member (or wildcard) segment to land on the type.
            if let Some(pos) = spec.rfind('.') {
                let head = &spec[..pos];
                if !head.is_empty() {
                    specs.push(head.to_string());
                }
                continue;
            }
        }
        specs.push(spec);
    }
    specs
}

/// Resolve import specifiers against the internal file set and count
/// in/out degrees of the resulting dependency graph.
///
/// A specifier `a.b.C` matches any file whose extension-stripped path ends
/// with the segments `a/b/C`; a wildcard `a.b.*` matches files whose
/// directory ends with `a/b`. Self-edges are discarded.
pub fn resolve_coupling(
    imports_by_path: &BTreeMap<String, Vec<String>>,
) -> BTreeMap<String, (u32, u32)> {
    let stems: Vec<(&String, Vec<&str>)> = imports_by_path
        .keys()
        .map(|path| {
            let stem = path.rsplit_once('.').map_or(path.as_str(), |(s, _)| s);
            (path, stem.split('/').collect())
        })
        .collect();

    let mut edges: BTreeSet<(&String, &String)> = BTreeSet::new();
    for (importer, specs) in imports_by_path {
        for spec in specs {
            let segments: Vec<&str> = spec.split('.').collect();
            let wildcard = segments.last() == Some(&"*");
            let want: &[&str] = if wildcard {
                &segments[..segments.len() - 1]
            } else {
                &segments
            };
            if want.is_empty() {
                continue;
            }
            for (path, stem) in &stems {
                if *path == importer {
                    continue;
                }
                let matched = if wildcard {
                    // Match the directory part.
                    stem.len() > want.len() && stem[..stem.len() - 1].ends_with(want)
                } else {
                    stem.ends_with(want)
                };
                if matched {
                    edges.insert((importer, path));
                }
            }
        }
    }

    let mut result: BTreeMap<String, (u32, u32)> = imports_by_path
        .keys()
        .map(|p| (p.clone(), (0, 0)))
        .collect();
    for (from, to) in edges {
        result.get_mut(to.as_str()).unwrap().0 += 1; // afferent: someone imports `to`
        result.get_mut(from.as_str()).unwrap().1 += 1; // efferent: `from` imports
    }
    result
}
