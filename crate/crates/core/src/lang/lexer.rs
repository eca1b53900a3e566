use super::{ParseError, ParseErrorKind};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    LBracket,
    RBracket,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Dot,
    Star,
    Plus,
    Question,
    Pipe,
    Amp,
    Bang,
    Lt,
    Le,
    Gt,
    Ge,
    Arrow,
    /// Bare identifier or keyword.
    Ident(String),
    /// Double-quoted name; never a keyword or a variable.
    Quoted(String),
    Number(f64),
    Int(u64),
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: usize,
}

pub(crate) const KEYWORDS: &[&str] = &["exists", "forall", "true", "nonempty", "dist", "and", "or", "not"];

pub(crate) fn is_plain_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !KEYWORDS.contains(&s)
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = |t| Some((t, 1));
        let simple = match c {
            b'[' => single(Tok::LBracket),
            b']' => single(Tok::RBracket),
            b'(' => single(Tok::LParen),
            b')' => single(Tok::RParen),
            b'{' => single(Tok::LBrace),
            b'}' => single(Tok::RBrace),
            b',' => single(Tok::Comma),
            b'.' => single(Tok::Dot),
            b'*' => single(Tok::Star),
            b'+' => single(Tok::Plus),
            b'?' => single(Tok::Question),
            b'|' => single(Tok::Pipe),
            b'&' => single(Tok::Amp),
            b'!' => single(Tok::Bang),
            b'<' => match bytes.get(i + 1) {
                Some(b'=') => Some((Tok::Le, 2)),
                Some(b'-') => Some((Tok::Arrow, 2)),
                _ => single(Tok::Lt),
            },
            b'>' => match bytes.get(i + 1) {
                Some(b'=') => Some((Tok::Ge, 2)),
                _ => single(Tok::Gt),
            },
            _ => None,
        };
        if let Some((tok, len)) = simple {
            out.push(Token { tok, pos: start });
            i += len;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let is_real = bytes.get(i) == Some(&b'.') && bytes.get(i + 1).is_some_and(u8::is_ascii_digit);
            if is_real {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let text = &src[start..i];
                let v: f64 = text.parse().map_err(|_| ParseError::new(ParseErrorKind::BadNumber(text.into()), start))?;
                out.push(Token { tok: Tok::Number(v), pos: start });
            } else {
                let text = &src[start..i];
                let tok = match text.parse::<u64>() {
                    Ok(n) => Tok::Int(n),
                    Err(_) => Tok::Number(text.parse().map_err(|_| ParseError::new(ParseErrorKind::BadNumber(text.into()), start))?),
                };
                out.push(Token { tok, pos: start });
            }
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token { tok: Tok::Ident(src[start..i].to_string()), pos: start });
        } else if c == b'"' {
            i += 1;
            let mut name = String::new();
            loop {
                match bytes.get(i) {
                    None => return Err(ParseError::new(ParseErrorKind::UnterminatedString, start)),
                    Some(b'"') => {
                        i += 1;
                        break;
                    }
                    Some(b'\\') if matches!(bytes.get(i + 1), Some(b'"') | Some(b'\\')) => {
                        name.push(bytes[i + 1] as char);
                        i += 2;
                    }
                    Some(_) => {
                        let ch = src[i..].chars().next().expect("in bounds");
                        name.push(ch);
                        i += ch.len_utf8();
                    }
                }
            }
            if name.is_empty() {
                return Err(ParseError::new(ParseErrorKind::EmptyName, start));
            }
            out.push(Token { tok: Tok::Quoted(name), pos: start });
        } else {
            let ch = src[i..].chars().next().expect("in bounds");
            return Err(ParseError::new(ParseErrorKind::UnexpectedChar(ch), start));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn arrows_and_comparisons() {
        assert_eq!(toks("x <- <= < >= >"), vec![Tok::Ident("x".into()), Tok::Arrow, Tok::Le, Tok::Lt, Tok::Ge, Tok::Gt]);
    }

    #[test]
    fn numbers() {
        assert_eq!(toks("5 2.5 7."), vec![Tok::Int(5), Tok::Number(2.5), Tok::Int(7), Tok::Dot]);
    }

    #[test]
    fn quoted_names() {
        assert_eq!(toks(r#""traffic light" "a\"b""#), vec![Tok::Quoted("traffic light".into()), Tok::Quoted("a\"b".into())]);
    }

    #[test]
    fn bad_char_position() {
        let e = tokenize("[car] $").unwrap_err();
        assert_eq!(e.pos, 6);
    }
}
