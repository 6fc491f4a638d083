//! Minimal s-expression reader for SMT-LIB2 scripts.

use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SExpr {
    Atom(String),
    List(Vec<SExpr>),
}

impl SExpr {
    pub fn atom(&self) -> Option<&str> {
        match self {
            SExpr::Atom(a) => Some(a),
            SExpr::List(_) => None,
        }
    }

    pub fn list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::Atom(_) => None,
            SExpr::List(items) => Some(items),
        }
    }
}

impl fmt::Display for SExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SExpr::Atom(a) => write!(f, "{a}"),
            SExpr::List(items) => {
                write!(f, "(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{item}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SExprError {
    #[error("unbalanced ')' at byte {0}")]
    UnexpectedClose(usize),
    #[error("unterminated list (missing ')')")]
    UnterminatedList,
    #[error("unterminated string literal starting at byte {0}")]
    UnterminatedString(usize),
    #[error("unterminated quoted symbol starting at byte {0}")]
    UnterminatedSymbol(usize),
}

/// Parse every top-level form in `text`. Comments run from `;` to the end of
/// the line; string literals and |quoted symbols| become plain atoms.
pub fn parse_all(text: &str) -> Result<Vec<SExpr>, SExprError> {
    let bytes = text.as_bytes();
    let mut i = 0usize;
    let mut stack: Vec<Vec<SExpr>> = Vec::new();
    let mut top: Vec<SExpr> = Vec::new();

    fn push(stack: &mut [Vec<SExpr>], top: &mut Vec<SExpr>, e: SExpr) {
        match stack.last_mut() {
            Some(frame) => frame.push(e),
            None => top.push(e),
        }
    }

    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b';' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'(' => {
                stack.push(Vec::new());
                i += 1;
            }
            b')' => {
                let frame = stack.pop().ok_or(SExprError::UnexpectedClose(i))?;
                push(&mut stack, &mut top, SExpr::List(frame));
                i += 1;
            }
            b'"' => {
                let start = i;
                i += 1;
                let mut s = String::new();
                loop {
                    if i >= bytes.len() {
                        return Err(SExprError::UnterminatedString(start));
                    }
                    if bytes[i] == b'"' {
                        // SMT-LIB escapes a quote by doubling it.
                        if bytes.get(i + 1) == Some(&b'"') {
                            s.push('"');
                            i += 2;
                        } else {
                            i += 1;
                            break;
                        }
                    } else {
                        s.push(bytes[i] as char);
                        i += 1;
                    }
                }
                push(&mut stack, &mut top, SExpr::Atom(s));
            }
            b'|' => {
                let start = i;
                i += 1;
                let mut s = String::new();
                loop {
                    if i >= bytes.len() {
                        return Err(SExprError::UnterminatedSymbol(start));
                    }
                    if bytes[i] == b'|' {
                        i += 1;
                        break;
                    }
                    s.push(bytes[i] as char);
                    i += 1;
                }
                push(&mut stack, &mut top, SExpr::Atom(s));
            }
            _ => {
                let start = i;
                while i < bytes.len()
                    && !matches!(bytes[i], b' ' | b'\t' | b'\r' | b'\n' | b'(' | b')' | b';')
                {
                    i += 1;
                }
                let atom = std::str::from_utf8(&bytes[start..i]).unwrap().to_string();
                push(&mut stack, &mut top, SExpr::Atom(atom));
            }
        }
    }
    if !stack.is_empty() {
        return Err(SExprError::UnterminatedList);
    }
    Ok(top)
}
