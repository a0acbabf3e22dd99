//! The line-oriented job configuration language.
//!
//! ```text
//! group a b s
//! auto fib
//! a -> ab
//! b -> a
//! s -> s
//! end
//! split hnn factor=a,b stable=s
//! subgroup P = abAB
//! bounds horizon=40 radius=4 maxExp=4 maxConj=4 seed=0
//! element x = abAB
//! ```
//!
//! `#` starts a comment. Emission is canonical: parse(emit(c)) = c and
//! emit(parse(emit(c))) is byte-identical.

use crate::autos::Automorphism;
use crate::error::{Error, Result};
use crate::splittings::SearchBounds;
use crate::words::{FreeBasis, Word};

#[derive(Debug, Clone, PartialEq)]
pub enum SplitDecl {
    Hnn { factor: Vec<usize>, stable: usize },
    Product { left: Vec<usize>, right: Vec<usize> },
}

#[derive(Debug, Clone)]
pub struct JobConfig {
    pub basis: FreeBasis,
    pub auto_name: Option<String>,
    pub alpha: Automorphism,
    pub splits: Vec<SplitDecl>,
    pub subgroups: Vec<(String, Vec<Word>)>,
    pub elements: Vec<(String, Word)>,
    pub bounds: SearchBounds,
}

impl JobConfig {
    /// The subgroup named A0 overrides the bounded search for A0.
    pub fn a0_override(&self) -> Option<&Vec<Word>> {
        self.subgroups
            .iter()
            .find(|(name, _)| name == "A0")
            .map(|(_, words)| words)
    }

    /// Candidate peripheral subgroups (everything not named A0).
    pub fn candidates(&self) -> Vec<(String, Vec<Word>)> {
        self.subgroups
            .iter()
            .filter(|(name, _)| name != "A0")
            .cloned()
            .collect()
    }
}

fn err(line: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Config {
        line,
        col,
        msg: msg.into(),
    }
}

fn parse_letter_list(basis: &FreeBasis, text: &str, line: usize, col: usize) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        let mut chars = part.chars();
        let (Some(c), None) = (chars.next(), chars.next()) else {
            return Err(err(
                line,
                col,
                format!("'{part}' is not a single generator name"),
            ));
        };
        let Some(idx) = basis.index_of(c) else {
            return Err(err(line, col, format!("undefined generator '{c}'")));
        };
        if out.contains(&idx) {
            return Err(err(line, col, format!("generator '{c}' repeated")));
        }
        out.push(idx);
    }
    Ok(out)
}

fn parse_word_at(basis: &FreeBasis, text: &str, line: usize, col: usize) -> Result<Word> {
    basis.parse_word(text).map_err(|e| match e {
        Error::Alphabet { ch } => {
            let offset = text.chars().position(|c| c == ch).unwrap_or(0);
            err(line, col + offset, format!("undefined generator '{ch}'"))
        }
        other => other,
    })
}

pub fn parse_config(text: &str) -> Result<JobConfig> {
    let mut basis: Option<FreeBasis> = None;
    let mut auto_name: Option<String> = None;
    let mut images: Option<Vec<Option<Word>>> = None;
    let mut auto_seen = false;
    let mut splits = Vec::new();
    let mut subgroups: Vec<(String, Vec<Word>)> = Vec::new();
    let mut elements: Vec<(String, Word)> = Vec::new();
    let mut bounds = SearchBounds::default();
    let mut bounds_seen = false;
    let mut in_auto = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let line = content.trim();
        if line.is_empty() {
            continue;
        }
        let col = content.len() - content.trim_start().len() + 1;

        if in_auto {
            if line == "end" {
                in_auto = false;
                let imgs = images.as_ref().unwrap();
                if let Some(missing) = imgs.iter().position(|w| w.is_none()) {
                    return Err(err(
                        line_no,
                        col,
                        format!(
                            "automorphism block ended without an image for '{}'",
                            basis.as_ref().unwrap().name(missing)
                        ),
                    ));
                }
                continue;
            }
            let Some((lhs, rhs)) = line.split_once("->") else {
                return Err(err(
                    line_no,
                    col,
                    "expected '<generator> -> <word>' or 'end'",
                ));
            };
            let b = basis.as_ref().unwrap();
            let lhs = lhs.trim();
            let mut chars = lhs.chars();
            let (Some(c), None) = (chars.next(), chars.next()) else {
                return Err(err(
                    line_no,
                    col,
                    format!("'{lhs}' is not a single generator name"),
                ));
            };
            let Some(gen) = b.index_of(c) else {
                return Err(err(line_no, col, format!("undefined generator '{c}'")));
            };
            let rhs_text = rhs.trim();
            let rhs_col = col + content.trim().find(rhs_text).unwrap_or(0);
            let word = parse_word_at(b, rhs_text, line_no, rhs_col)?;
            let slot = &mut images.as_mut().unwrap()[gen];
            if slot.is_some() {
                return Err(err(line_no, col, format!("duplicate image for '{c}'")));
            }
            *slot = Some(word);
            continue;
        }

        let (keyword, rest) = match line.split_once(char::is_whitespace) {
            Some((k, r)) => (k, r.trim()),
            None => (line, ""),
        };
        match keyword {
            "group" => {
                if basis.is_some() {
                    return Err(err(line_no, col, "duplicate group line"));
                }
                basis = Some(FreeBasis::parse(rest).map_err(|e| err(line_no, col, e.to_string()))?);
            }
            "auto" => {
                let b = basis
                    .as_ref()
                    .ok_or_else(|| err(line_no, col, "auto block before group line"))?;
                if auto_seen {
                    return Err(err(line_no, col, "duplicate auto block"));
                }
                auto_seen = true;
                auto_name = if rest.is_empty() {
                    None
                } else {
                    Some(rest.to_string())
                };
                images = Some(vec![None; b.len()]);
                in_auto = true;
            }
            "split" => {
                let b = basis
                    .as_ref()
                    .ok_or_else(|| err(line_no, col, "split before group line"))?;
                let mut kind = None;
                let mut pairs = Vec::new();
                for tok in rest.split_whitespace() {
                    match tok.split_once('=') {
                        Some((k, v)) => pairs.push((k, v)),
                        None if kind.is_none() => kind = Some(tok),
                        None => return Err(err(line_no, col, format!("unexpected token '{tok}'"))),
                    }
                }
                match kind {
                    Some("hnn") => {
                        let mut factor = None;
                        let mut stable = None;
                        for (k, v) in pairs {
                            match k {
                                "factor" => factor = Some(parse_letter_list(b, v, line_no, col)?),
                                "stable" => {
                                    stable = Some(
                                        parse_letter_list(b, v, line_no, col)?
                                            .first()
                                            .copied()
                                            .ok_or_else(|| {
                                                err(line_no, col, "empty stable letter")
                                            })?,
                                    )
                                }
                                _ => return Err(err(line_no, col, format!("unknown key '{k}'"))),
                            }
                        }
                        let factor =
                            factor.ok_or_else(|| err(line_no, col, "hnn split needs factor="))?;
                        let stable =
                            stable.ok_or_else(|| err(line_no, col, "hnn split needs stable="))?;
                        splits.push(SplitDecl::Hnn { factor, stable });
                    }
                    Some("product") => {
                        let mut left = None;
                        let mut right = None;
                        for (k, v) in pairs {
                            match k {
                                "left" => left = Some(parse_letter_list(b, v, line_no, col)?),
                                "right" => right = Some(parse_letter_list(b, v, line_no, col)?),
                                _ => return Err(err(line_no, col, format!("unknown key '{k}'"))),
                            }
                        }
                        let left =
                            left.ok_or_else(|| err(line_no, col, "product split needs left="))?;
                        let right =
                            right.ok_or_else(|| err(line_no, col, "product split needs right="))?;
                        splits.push(SplitDecl::Product { left, right });
                    }
                    _ => return Err(err(line_no, col, "split kind must be hnn or product")),
                }
            }
            "subgroup" => {
                let b = basis
                    .as_ref()
                    .ok_or_else(|| err(line_no, col, "subgroup before group line"))?;
                let Some((name, words_text)) = rest.split_once('=') else {
                    return Err(err(line_no, col, "expected 'subgroup <name> = <words>'"));
                };
                let name = name.trim().to_string();
                if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                    return Err(err(line_no, col, format!("bad subgroup name '{name}'")));
                }
                if subgroups.iter().any(|(n, _)| n == &name) {
                    return Err(err(line_no, col, format!("duplicate subgroup '{name}'")));
                }
                let mut words = Vec::new();
                let trimmed = words_text.trim();
                if !trimmed.is_empty() {
                    for part in trimmed.split(',') {
                        words.push(parse_word_at(b, part.trim(), line_no, col)?);
                    }
                }
                subgroups.push((name, words));
            }
            "element" => {
                let b = basis
                    .as_ref()
                    .ok_or_else(|| err(line_no, col, "element before group line"))?;
                let Some((name, word_text)) = rest.split_once('=') else {
                    return Err(err(line_no, col, "expected 'element <name> = <word>'"));
                };
                let name = name.trim().to_string();
                if name.is_empty() {
                    return Err(err(line_no, col, "empty element name"));
                }
                if elements.iter().any(|(n, _)| n == &name) {
                    return Err(err(line_no, col, format!("duplicate element '{name}'")));
                }
                let word = parse_word_at(b, word_text.trim(), line_no, col)?;
                elements.push((name, word));
            }
            "bounds" => {
                if bounds_seen {
                    return Err(err(line_no, col, "duplicate bounds line"));
                }
                bounds_seen = true;
                for tok in rest.split_whitespace() {
                    let Some((k, v)) = tok.split_once('=') else {
                        return Err(err(
                            line_no,
                            col,
                            format!("expected key=value, got '{tok}'"),
                        ));
                    };
                    let parse_num = |v: &str| -> Result<usize> {
                        v.parse::<usize>()
                            .map_err(|_| err(line_no, col, format!("bad number '{v}'")))
                    };
                    match k {
                        "horizon" => bounds.horizon = parse_num(v)?,
                        "radius" => bounds.radius = parse_num(v)?,
                        "maxExp" => bounds.max_exp = parse_num(v)?,
                        "maxConj" => bounds.max_conj = parse_num(v)?,
                        "seed" => {
                            bounds.seed = v
                                .parse::<u64>()
                                .map_err(|_| err(line_no, col, format!("bad seed '{v}'")))?
                        }
                        _ => return Err(err(line_no, col, format!("unknown bound '{k}'"))),
                    }
                }
            }
            other => return Err(err(line_no, col, format!("unknown directive '{other}'"))),
        }
    }
    if in_auto {
        return Err(err(
            text.lines().count(),
            1,
            "automorphism block not terminated by 'end'",
        ));
    }
    let basis = basis.ok_or_else(|| err(1, 1, "missing group line"))?;
    let alpha = match images {
        Some(imgs) => {
            let imgs: Vec<Word> = imgs.into_iter().map(Option::unwrap).collect();
            Automorphism::validate(basis.clone(), imgs)?
        }
        None => Automorphism::identity(basis.clone()),
    };
    for (name, _) in &subgroups {
        if name == "A0" {
            // verified later against the declared split
            continue;
        }
    }
    Ok(JobConfig {
        basis,
        auto_name,
        alpha,
        splits,
        subgroups,
        elements,
        bounds,
    })
}

pub fn emit_config(config: &JobConfig) -> String {
    let b = &config.basis;
    let mut out = String::new();
    let letters: Vec<String> = b.names().iter().map(|c| c.to_string()).collect();
    out.push_str(&format!("group {}\n", letters.join(" ")));
    match &config.auto_name {
        Some(name) => out.push_str(&format!("auto {name}\n")),
        None => out.push_str("auto\n"),
    }
    for gen in 0..b.len() {
        out.push_str(&format!(
            "{} -> {}\n",
            b.name(gen),
            b.render(config.alpha.image_of(gen))
        ));
    }
    out.push_str("end\n");
    for split in &config.splits {
        match split {
            SplitDecl::Hnn { factor, stable } => {
                let f: Vec<String> = factor.iter().map(|&g| b.name(g).to_string()).collect();
                out.push_str(&format!(
                    "split hnn factor={} stable={}\n",
                    f.join(","),
                    b.name(*stable)
                ));
            }
            SplitDecl::Product { left, right } => {
                let l: Vec<String> = left.iter().map(|&g| b.name(g).to_string()).collect();
                let r: Vec<String> = right.iter().map(|&g| b.name(g).to_string()).collect();
                out.push_str(&format!(
                    "split product left={} right={}\n",
                    l.join(","),
                    r.join(",")
                ));
            }
        }
    }
    for (name, words) in &config.subgroups {
        let ws: Vec<String> = words.iter().map(|w| b.render(w)).collect();
        out.push_str(&format!("subgroup {name} = {}\n", ws.join(",")));
    }
    out.push_str(&format!(
        "bounds horizon={} radius={} maxExp={} maxConj={} seed={}\n",
        config.bounds.horizon,
        config.bounds.radius,
        config.bounds.max_exp,
        config.bounds.max_conj,
        config.bounds.seed
    ));
    for (name, word) in &config.elements {
        out.push_str(&format!("element {name} = {}\n", b.render(word)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const FLAGSHIP: &str = "\
# flagship example
group a b s
auto fib
a -> ab
b -> a
s -> s
end
split hnn factor=a,b stable=s
subgroup P = abAB
bounds horizon=40 radius=4 maxExp=4 maxConj=4 seed=0
element x = abAB
element y = a
";

    #[test]
    fn parse_minimal_config() {
        let cfg = parse_config("group a b\n").unwrap();
        assert_eq!(cfg.basis.len(), 2);
        assert_eq!(cfg.alpha, Automorphism::identity(cfg.basis.clone()));
        assert!(cfg.splits.is_empty());
    }

    #[test]
    fn parse_flagship_config() {
        let cfg = parse_config(FLAGSHIP).unwrap();
        assert_eq!(cfg.auto_name.as_deref(), Some("fib"));
        assert_eq!(cfg.splits.len(), 1);
        assert_eq!(
            cfg.splits[0],
            SplitDecl::Hnn {
                factor: vec![0, 1],
                stable: 2
            }
        );
        assert_eq!(cfg.subgroups.len(), 1);
        assert_eq!(cfg.elements.len(), 2);
        assert_eq!(cfg.bounds.horizon, 40);
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let cfg = parse_config(FLAGSHIP).unwrap();
        let emitted = emit_config(&cfg);
        let reparsed = parse_config(&emitted).unwrap();
        assert_eq!(emit_config(&reparsed), emitted);
    }

    #[test]
    fn undefined_generator_is_located() {
        let text = "group a b\nauto\na -> ab\nb -> ac\nend\n";
        match parse_config(text) {
            Err(Error::Config { line, msg, .. }) => {
                assert_eq!(line, 4);
                assert!(msg.contains("'c'"), "{msg}");
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn invalid_automorphism_is_rejected() {
        let text = "group a b\nauto\na -> aa\nb -> b\nend\n";
        match parse_config(text) {
            Err(Error::NotAnAutomorphism { witness }) => assert_eq!(witness, 'a'),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "\n# heading\ngroup a b   # trailing\n\nelement e = abAB # ok\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.elements.len(), 1);
    }

    #[test]
    fn missing_image_is_reported() {
        let text = "group a b\nauto\na -> a\nend\n";
        match parse_config(text) {
            Err(Error::Config { msg, .. }) => assert!(msg.contains("'b'"), "{msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }
}
