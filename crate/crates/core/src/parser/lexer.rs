use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Int(i64),
    Float(f64),
    Str(String),
    Param(String),
    Punct(&'static str),
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(i) => i.to_string(),
            Tok::Float(x) => x.to_string(),
            Tok::Str(s) => format!("{s:?}"),
            Tok::Param(p) => format!("${p}"),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

const PUNCT: [&str; 20] = [
    "<>", "<=", ">=", "!=", "(", ")", "[", "]", "{", "}", ":", "|", ",", ".", "*", "-", "<", ">",
    "=", ";",
];

pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, column, expected: &str, found: String| Error::Syntax {
        line,
        column,
        expected: vec![expected.to_string()],
        found,
    };
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let advance = |n: usize, i: &mut usize, line: &mut usize, col: &mut usize| {
            for _ in 0..n {
                if chars[*i] == '\n' {
                    *line += 1;
                    *col = 1;
                } else {
                    *col += 1;
                }
                *i += 1;
            }
        };
        if c.is_whitespace() {
            advance(1, &mut i, &mut line, &mut col);
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                advance(1, &mut i, &mut line, &mut col);
            }
            continue;
        }
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                advance(1, &mut i, &mut line, &mut col);
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else if c == '`' {
            advance(1, &mut i, &mut line, &mut col);
            let start = i;
            while i < chars.len() && chars[i] != '`' {
                advance(1, &mut i, &mut line, &mut col);
            }
            if i == chars.len() {
                return Err(err(tl, tc, "closing backtick", "end of input".into()));
            }
            let s: String = chars[start..i].iter().collect();
            advance(1, &mut i, &mut line, &mut col);
            Tok::Ident(s)
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                advance(1, &mut i, &mut line, &mut col);
            }
            let mut float = false;
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                float = true;
                advance(1, &mut i, &mut line, &mut col);
                while i < chars.len() && chars[i].is_ascii_digit() {
                    advance(1, &mut i, &mut line, &mut col);
                }
            }
            let s: String = chars[start..i].iter().collect();
            if float {
                Tok::Float(s.parse().map_err(|_| err(tl, tc, "number", s.clone()))?)
            } else {
                Tok::Int(
                    s.parse()
                        .map_err(|_| err(tl, tc, "64-bit integer", s.clone()))?,
                )
            }
        } else if c == '"' || c == '\'' {
            advance(1, &mut i, &mut line, &mut col);
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None => return Err(err(tl, tc, "closing quote", "end of input".into())),
                    Some(&q) if q == c => {
                        advance(1, &mut i, &mut line, &mut col);
                        break;
                    }
                    Some('\\') if i + 1 < chars.len() => {
                        let e = chars[i + 1];
                        s.push(match e {
                            'n' => '\n',
                            't' => '\t',
                            other => other,
                        });
                        advance(2, &mut i, &mut line, &mut col);
                    }
                    Some(&ch) => {
                        s.push(ch);
                        advance(1, &mut i, &mut line, &mut col);
                    }
                }
            }
            Tok::Str(s)
        } else if c == '$' {
            advance(1, &mut i, &mut line, &mut col);
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                advance(1, &mut i, &mut line, &mut col);
            }
            if start == i {
                let found = chars
                    .get(i)
                    .map_or("end of input".into(), |c| format!("`{c}`"));
                return Err(err(tl, tc + 1, "parameter name", found));
            }
            Tok::Param(chars[start..i].iter().collect())
        } else {
            let rest: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            match PUNCT.iter().find(|p| rest.starts_with(**p)) {
                Some(p) => {
                    advance(p.len(), &mut i, &mut line, &mut col);
                    Tok::Punct(p)
                }
                None => return Err(err(tl, tc, "a token", format!("`{c}`"))),
            }
        };
        out.push(Token {
            tok,
            line: tl,
            column: tc,
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arrows_and_comparisons() {
        let toks: Vec<Tok> = tokenize("(a)<-[:K]-(b) WHERE a.x <> 1.5 AND b.y >= $p")
            .unwrap()
            .into_iter()
            .map(|t| t.tok)
            .collect();
        assert!(toks.contains(&Tok::Punct("<>")));
        assert!(toks.contains(&Tok::Punct(">=")));
        assert!(toks.contains(&Tok::Float(1.5)));
        assert!(toks.contains(&Tok::Param("p".into())));
        assert_eq!(toks[3], Tok::Punct("<"));
        assert_eq!(toks[4], Tok::Punct("-"));
    }

    #[test]
    fn positions_and_errors() {
        let toks = tokenize("MATCH\n  (a)").unwrap();
        assert_eq!((toks[1].line, toks[1].column), (2, 3));
        assert!(matches!(
            tokenize("MATCH (a) WHERE a.x = \"open"),
            Err(Error::Syntax { line: 1, .. })
        ));
        assert!(tokenize("a @ b").is_err());
    }
}
