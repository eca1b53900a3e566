use super::ast::{CmpOp, Pattern, Quantifier, SpatialFormula, SpatialTerm};
use super::lexer::{tokenize, Tok, Token, KEYWORDS};
use super::{ParseError, ParseErrorKind};

const MAX_DEPTH: usize = 128;
const MAX_REPEAT: u64 = 256;
const MAX_PATTERN_SIZE: usize = 100_000;

/// Parses concrete query syntax into a desugared [`Pattern`].
pub fn parse(src: &str) -> Result<Pattern, ParseError> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, i: 0, end: src.len(), scope: Vec::new(), depth: 0 };
    let pat = p.alternation()?;
    match p.peek() {
        None => Ok(pat),
        Some(t) => Err(p.unexpected(t.clone(), "end of input")),
    }
}

/// `p{min,max}` (or `p{min,}` when `max` is `None`) in core constructors.
///
/// Returns `None` when `min > max`.
pub fn repeat(p: &Pattern, min: usize, max: Option<usize>) -> Option<Pattern> {
    match max {
        Some(max) if min > max => None,
        Some(0) => Some(Pattern::epsilon()),
        Some(max) => {
            let tail = optional_chain(p, max - min);
            Some(match (min, tail) {
                (0, Some(t)) => t,
                (m, Some(t)) => Pattern::concat(p.power(m), t),
                (m, None) => p.power(m),
            })
        }
        None if min == 0 => Some(Pattern::star(p.clone())),
        None => Some(Pattern::concat(p.power(min), Pattern::star(p.clone()))),
    }
}

/// `p+` as `p p*`.
pub fn plus(p: &Pattern) -> Pattern {
    Pattern::concat(p.clone(), Pattern::star(p.clone()))
}

/// `p?` as `p | ε`.
pub fn optional(p: &Pattern) -> Pattern {
    Pattern::alt(p.clone(), Pattern::epsilon())
}

// Zero to `k` copies, nested as `(p (p ...)?)?`.
fn optional_chain(p: &Pattern, k: usize) -> Option<Pattern> {
    if k == 0 {
        return None;
    }
    let inner = match optional_chain(p, k - 1) {
        Some(rest) => Pattern::concat(p.clone(), rest),
        None => p.clone(),
    };
    Some(optional(&inner))
}

struct Parser {
    toks: Vec<Token>,
    i: usize,
    end: usize,
    scope: Vec<String>,
    depth: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.i)
    }

    fn peek_tok(&self) -> Option<&Tok> {
        self.peek().map(|t| &t.tok)
    }

    fn pos(&self) -> usize {
        self.peek().map_or(self.end, |t| t.pos)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.toks.get(self.i).cloned();
        if t.is_some() {
            self.i += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek_tok() == Some(tok) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if matches!(self.peek_tok(), Some(Tok::Ident(s)) if s == kw) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek_tok(), Some(Tok::Ident(s)) if s == kw)
    }

    fn unexpected(&self, t: Token, expected: &'static str) -> ParseError {
        ParseError::new(ParseErrorKind::UnexpectedToken { found: describe(&t.tok), expected }, t.pos)
    }

    fn expect(&mut self, tok: Tok, expected: &'static str) -> PResult<()> {
        match self.bump() {
            Some(t) if t.tok == tok => Ok(()),
            Some(t) => Err(self.unexpected(t, expected)),
            None => Err(ParseError::new(ParseErrorKind::UnexpectedEnd { expected }, self.end)),
        }
    }

    fn nested<T>(&mut self, f: impl FnOnce(&mut Self) -> PResult<T>) -> PResult<T> {
        if self.depth >= MAX_DEPTH {
            return Err(ParseError::new(ParseErrorKind::TooDeep, self.pos()));
        }
        self.depth += 1;
        let r = f(self);
        self.depth -= 1;
        r
    }

    fn check_size(&self, size: usize, pos: usize) -> PResult<()> {
        if size > MAX_PATTERN_SIZE {
            Err(ParseError::new(ParseErrorKind::PatternTooLarge, pos))
        } else {
            Ok(())
        }
    }

    // ---- patterns ----

    fn alternation(&mut self) -> PResult<Pattern> {
        self.nested(|p| {
            let mut left = p.concatenation()?;
            while p.eat(&Tok::Pipe) {
                let right = p.concatenation()?;
                left = Pattern::alt(left, right);
            }
            Ok(left)
        })
    }

    fn starts_atom(&self) -> bool {
        match self.peek_tok() {
            Some(Tok::LBracket | Tok::LParen | Tok::Dot) => true,
            Some(Tok::Ident(s)) => s == "exists" || s == "forall" || !KEYWORDS.contains(&s.as_str()),
            _ => false,
        }
    }

    fn concatenation(&mut self) -> PResult<Pattern> {
        let mut left = self.postfixed()?;
        while self.starts_atom() {
            let pos = self.pos();
            let right = self.postfixed()?;
            self.check_size(left.size() + right.size(), pos)?;
            left = Pattern::concat(left, right);
        }
        Ok(left)
    }

    fn postfixed(&mut self) -> PResult<Pattern> {
        if self.at_kw("exists") || self.at_kw("forall") {
            return self.quantified();
        }
        let mut p = self.atom()?;
        loop {
            let pos = self.pos();
            match self.peek_tok() {
                Some(Tok::Star) => {
                    self.i += 1;
                    p = Pattern::star(p);
                }
                Some(Tok::Plus) => {
                    self.i += 1;
                    self.check_size(2 * p.size(), pos)?;
                    p = plus(&p);
                }
                Some(Tok::Question) => {
                    self.i += 1;
                    p = optional(&p);
                }
                Some(Tok::LBrace) => {
                    self.i += 1;
                    let (min, max) = self.bounds()?;
                    let copies = max.unwrap_or(min).max(min) as usize + 1;
                    self.check_size(copies.saturating_mul(p.size() + 2), pos)?;
                    p = repeat(&p, min as usize, max.map(|m| m as usize))
                        .ok_or_else(|| ParseError::new(ParseErrorKind::EmptyRepetition { min, max: max.unwrap_or(0) }, pos))?;
                }
                _ => return Ok(p),
            }
        }
    }

    fn int(&mut self) -> PResult<u64> {
        match self.bump() {
            Some(Token { tok: Tok::Int(n), pos }) => {
                if n > MAX_REPEAT {
                    Err(ParseError::new(ParseErrorKind::RepetitionTooLarge(n), pos))
                } else {
                    Ok(n)
                }
            }
            Some(t) => Err(self.unexpected(t, "repetition count")),
            None => Err(ParseError::new(ParseErrorKind::UnexpectedEnd { expected: "repetition count" }, self.end)),
        }
    }

    fn bounds(&mut self) -> PResult<(u64, Option<u64>)> {
        let min = self.int()?;
        if self.eat(&Tok::RBrace) {
            return Ok((min, Some(min)));
        }
        self.expect(Tok::Comma, "`,` or `}`")?;
        if self.eat(&Tok::RBrace) {
            return Ok((min, None));
        }
        let max = self.int()?;
        self.expect(Tok::RBrace, "`}`")?;
        Ok((min, Some(max)))
    }

    fn atom(&mut self) -> PResult<Pattern> {
        let pos = self.pos();
        match self.bump() {
            Some(Token { tok: Tok::LBracket, .. }) => {
                let f = self.formula()?;
                self.expect(Tok::RBracket, "`]`")?;
                Ok(Pattern::Frame(f))
            }
            Some(Token { tok: Tok::Dot, .. }) => Ok(Pattern::any()),
            Some(Token { tok: Tok::LParen, .. }) => {
                let p = self.alternation()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(p)
            }
            Some(Token { tok: Tok::Ident(name), .. }) if !KEYWORDS.contains(&name.as_str()) => {
                if self.scope.contains(&name) {
                    Ok(Pattern::var(&name))
                } else {
                    Err(ParseError::new(ParseErrorKind::UnboundVariable(name), pos))
                }
            }
            Some(t) => Err(self.unexpected(t, "pattern")),
            None => Err(ParseError::new(ParseErrorKind::UnexpectedEnd { expected: "pattern" }, self.end)),
        }
    }

    fn quantified(&mut self) -> PResult<Pattern> {
        let quantifier = if self.eat_kw("exists") { Quantifier::Exists } else { self.bump(); Quantifier::Forall };
        let var_pos = self.pos();
        let var = match self.bump() {
            Some(Token { tok: Tok::Ident(v), .. }) if !KEYWORDS.contains(&v.as_str()) => v,
            Some(Token { tok: Tok::Ident(v), pos }) => return Err(ParseError::new(ParseErrorKind::KeywordAsVariable(v), pos)),
            Some(t) => return Err(self.unexpected(t, "variable name")),
            None => return Err(ParseError::new(ParseErrorKind::UnexpectedEnd { expected: "variable name" }, self.end)),
        };
        if self.scope.contains(&var) {
            return Err(ParseError::new(ParseErrorKind::Shadowing(var), var_pos));
        }
        self.expect(Tok::Arrow, "`<-`")?;
        self.expect(Tok::LBracket, "`[`")?;
        let class = match self.bump() {
            Some(Token { tok: Tok::Ident(c), .. }) if !KEYWORDS.contains(&c.as_str()) => c,
            Some(Token { tok: Tok::Quoted(c), .. }) => c,
            Some(t) => return Err(self.unexpected(t, "class name")),
            None => return Err(ParseError::new(ParseErrorKind::UnexpectedEnd { expected: "class name" }, self.end)),
        };
        self.expect(Tok::RBracket, "`]`")?;
        self.expect(Tok::Dot, "`.`")?;
        self.scope.push(var.clone());
        let body = self.alternation();
        self.scope.pop();
        Ok(Pattern::Quantified { quantifier, var, class, body: Box::new(body?) })
    }

    // ---- formulas ----

    fn formula(&mut self) -> PResult<SpatialFormula> {
        self.nested(|p| {
            let mut left = p.conjunction()?;
            while p.eat_kw("or") {
                let right = p.conjunction()?;
                left = SpatialFormula::or(left, right);
            }
            Ok(left)
        })
    }

    fn conjunction(&mut self) -> PResult<SpatialFormula> {
        let mut left = self.negation()?;
        while self.eat_kw("and") {
            let right = self.negation()?;
            left = SpatialFormula::and(left, right);
        }
        Ok(left)
    }

    fn negation(&mut self) -> PResult<SpatialFormula> {
        if self.eat_kw("not") {
            let inner = self.nested(|p| p.negation())?;
            return Ok(SpatialFormula::not(inner));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<SpatialFormula> {
        if self.eat_kw("true") {
            return Ok(SpatialFormula::True);
        }
        if self.eat_kw("nonempty") {
            self.expect(Tok::LParen, "`(`")?;
            let t = self.term()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(SpatialFormula::NonEmpty(t));
        }
        if self.eat_kw("dist") {
            self.expect(Tok::LParen, "`(`")?;
            let left = self.term()?;
            self.expect(Tok::Comma, "`,`")?;
            let right = self.term()?;
            self.expect(Tok::RParen, "`)`")?;
            let op = match self.bump() {
                Some(Token { tok: Tok::Lt, .. }) => CmpOp::Lt,
                Some(Token { tok: Tok::Le, .. }) => CmpOp::Le,
                Some(Token { tok: Tok::Gt, .. }) => CmpOp::Gt,
                Some(Token { tok: Tok::Ge, .. }) => CmpOp::Ge,
                Some(t) => return Err(self.unexpected(t, "comparison operator")),
                None => return Err(ParseError::new(ParseErrorKind::UnexpectedEnd { expected: "comparison operator" }, self.end)),
            };
            let threshold = match self.bump() {
                Some(Token { tok: Tok::Int(n), .. }) => n as f64,
                Some(Token { tok: Tok::Number(v), .. }) => v,
                Some(t) => return Err(self.unexpected(t, "distance threshold")),
                None => return Err(ParseError::new(ParseErrorKind::UnexpectedEnd { expected: "distance threshold" }, self.end)),
            };
            return Ok(SpatialFormula::Dist { left, right, op, threshold });
        }
        if self.peek_tok() == Some(&Tok::LParen) {
            // `(` opens either a region term or a grouped formula; try the
            // term reading first.
            let save = self.i;
            let term_err = match self.term() {
                Ok(t) => return Ok(SpatialFormula::NonEmpty(t)),
                Err(e) => e,
            };
            self.i = save;
            self.i += 1;
            let grouped = self.formula().and_then(|f| {
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            });
            return grouped.map_err(|e| if term_err.pos > e.pos { term_err } else { e });
        }
        Ok(SpatialFormula::NonEmpty(self.term()?))
    }

    // ---- terms ----

    fn term(&mut self) -> PResult<SpatialTerm> {
        self.nested(|p| {
            let mut left = p.intersection()?;
            while p.eat(&Tok::Pipe) {
                let right = p.intersection()?;
                left = SpatialTerm::union(left, right);
            }
            Ok(left)
        })
    }

    fn intersection(&mut self) -> PResult<SpatialTerm> {
        let mut left = self.complement()?;
        while self.eat(&Tok::Amp) {
            let right = self.complement()?;
            left = SpatialTerm::intersect(left, right);
        }
        Ok(left)
    }

    fn complement(&mut self) -> PResult<SpatialTerm> {
        if self.eat(&Tok::Bang) {
            let inner = self.nested(|p| p.complement())?;
            return Ok(SpatialTerm::complement(inner));
        }
        self.term_atom()
    }

    fn term_atom(&mut self) -> PResult<SpatialTerm> {
        match self.bump() {
            Some(Token { tok: Tok::Ident(name), .. }) if !KEYWORDS.contains(&name.as_str()) => {
                if self.scope.contains(&name) {
                    Ok(SpatialTerm::Var(name))
                } else {
                    Ok(SpatialTerm::Class(name))
                }
            }
            Some(Token { tok: Tok::Quoted(name), .. }) => Ok(SpatialTerm::Class(name)),
            Some(Token { tok: Tok::LParen, .. }) => {
                let t = self.term()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(t)
            }
            Some(t) => Err(self.unexpected(t, "class, variable or `(`")),
            None => Err(ParseError::new(ParseErrorKind::UnexpectedEnd { expected: "class, variable or `(`" }, self.end)),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::LBracket => "`[`".into(),
        Tok::RBracket => "`]`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::LBrace => "`{`".into(),
        Tok::RBrace => "`}`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Dot => "`.`".into(),
        Tok::Star => "`*`".into(),
        Tok::Plus => "`+`".into(),
        Tok::Question => "`?`".into(),
        Tok::Pipe => "`|`".into(),
        Tok::Amp => "`&`".into(),
        Tok::Bang => "`!`".into(),
        Tok::Lt => "`<`".into(),
        Tok::Le => "`<=`".into(),
        Tok::Gt => "`>`".into(),
        Tok::Ge => "`>=`".into(),
        Tok::Arrow => "`<-`".into(),
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Quoted(s) => format!("\"{s}\""),
        Tok::Number(v) => format!("`{v}`"),
        Tok::Int(n) => format!("`{n}`"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::ast::SpatialTerm as T;

    fn nonempty(t: T) -> Pattern {
        Pattern::Frame(SpatialFormula::NonEmpty(t))
    }

    #[test]
    fn same_car_twice() {
        let p = parse("exists x <- [car] . x x").unwrap();
        assert_eq!(p, Pattern::exists("x", "car", Pattern::concat(Pattern::var("x"), Pattern::var("x"))));
    }

    #[test]
    fn car_or_bus() {
        assert_eq!(parse("[car]|[bus]").unwrap(), Pattern::alt(Pattern::class("car"), Pattern::class("bus")));
    }

    #[test]
    fn alternating_star() {
        assert_eq!(
            parse("([car][bus])*").unwrap(),
            Pattern::star(Pattern::concat(Pattern::class("car"), Pattern::class("bus")))
        );
    }

    #[test]
    fn unbound_variable() {
        let e = parse("x x").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnboundVariable("x".into()));
        assert_eq!(e.pos, 0);
    }

    #[test]
    fn shadowing_is_rejected() {
        let e = parse("forall x <- [car] . exists x <- [bus] . x").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Shadowing("x".into()));
        assert_eq!(e.pos, 27);
    }

    #[test]
    fn sibling_scopes_may_reuse_names() {
        assert!(parse("(exists x <- [car] . x) (exists x <- [bus] . x)").is_ok());
    }

    #[test]
    fn precedence() {
        // star > concat > alternation
        let p = parse("[a] [b]* | [c]").unwrap();
        assert_eq!(
            p,
            Pattern::alt(Pattern::concat(Pattern::class("a"), Pattern::star(Pattern::class("b"))), Pattern::class("c"))
        );
    }

    #[test]
    fn quantifier_body_extends_right() {
        let p = parse("[bus] exists x <- [car] . x | [bus]").unwrap();
        assert_eq!(
            p,
            Pattern::concat(Pattern::class("bus"), Pattern::exists("x", "car", Pattern::alt(Pattern::var("x"), Pattern::class("bus"))))
        );
    }

    #[test]
    fn variables_inside_brackets() {
        let p = parse("exists c <- [car] . exists b <- [bus] . [c & b]").unwrap();
        let inner = nonempty(T::intersect(T::var("c"), T::var("b")));
        assert_eq!(p, Pattern::exists("c", "car", Pattern::exists("b", "bus", inner)));
    }

    #[test]
    fn metric_predicate() {
        let p = parse("forall c <- [car] . [dist(c, pedestrian) > 500]").unwrap();
        let f = SpatialFormula::dist(T::var("c"), T::class("pedestrian"), CmpOp::Gt, 500.0);
        assert_eq!(p, Pattern::forall("c", "car", Pattern::Frame(f)));
    }

    #[test]
    fn formula_connectives_and_grouping() {
        let p = parse("[(car | bus) & person and not (dist(a, b) <= 1.5 or true)]").unwrap();
        let t = T::intersect(T::union(T::class("car"), T::class("bus")), T::class("person"));
        let f = SpatialFormula::and(
            SpatialFormula::NonEmpty(t),
            SpatialFormula::not(SpatialFormula::or(
                SpatialFormula::dist(T::class("a"), T::class("b"), CmpOp::Le, 1.5),
                SpatialFormula::True,
            )),
        );
        assert_eq!(p, Pattern::Frame(f));
    }

    #[test]
    fn complement_and_nonempty_keyword() {
        assert_eq!(parse("[nonempty(!car)]").unwrap(), nonempty(T::complement(T::class("car"))));
        assert_eq!(parse("[!car]").unwrap(), nonempty(T::complement(T::class("car"))));
    }

    #[test]
    fn wildcard_and_true() {
        assert_eq!(parse(".*").unwrap(), Pattern::star(Pattern::any()));
        assert_eq!(parse("[true]").unwrap(), Pattern::any());
    }

    #[test]
    fn bounded_repetition() {
        let c = Pattern::class("car");
        assert_eq!(parse("[car]{3}").unwrap(), c.power(3));
        assert_eq!(parse("[car]{2,}").unwrap(), Pattern::concat(c.power(2), Pattern::star(c.clone())));
        assert_eq!(parse("[car]{0,}").unwrap(), Pattern::star(c.clone()));
        assert_eq!(parse("[car]{1,2}").unwrap(), Pattern::concat(c.clone(), optional(&c)));
        assert_eq!(parse("[car]{0}").unwrap(), Pattern::epsilon());
        assert_eq!(parse("[car]+").unwrap(), Pattern::concat(c.clone(), Pattern::star(c.clone())));
        assert_eq!(parse("[car]?").unwrap(), Pattern::alt(c, Pattern::epsilon()));
    }

    #[test]
    fn inverted_bounds() {
        let e = parse("[car]{3,2}").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::EmptyRepetition { min: 3, max: 2 });
        assert_eq!(e.pos, 5);
    }

    #[test]
    fn repetition_limits() {
        assert!(matches!(parse("[car]{100000}").unwrap_err().kind, ParseErrorKind::RepetitionTooLarge(_)));
        assert_eq!(parse("(([a]{200}){200}){200}").unwrap_err().kind, ParseErrorKind::PatternTooLarge);
    }

    #[test]
    fn quoted_class_names() {
        assert_eq!(parse(r#"["traffic light"]"#).unwrap(), Pattern::class("traffic light"));
        let p = parse(r#"exists x <- ["x"] . [x & "x"]"#).unwrap();
        assert_eq!(p, Pattern::exists("x", "x", nonempty(T::intersect(T::var("x"), T::class("x")))));
    }

    #[test]
    fn positioned_errors() {
        assert_eq!(parse("[car").unwrap_err().kind, ParseErrorKind::UnexpectedEnd { expected: "`]`" });
        assert_eq!(parse("[car]]").unwrap_err().pos, 5);
        assert_eq!(parse("").unwrap_err().kind, ParseErrorKind::UnexpectedEnd { expected: "pattern" });
        assert!(matches!(parse("exists true <- [car] . x").unwrap_err().kind, ParseErrorKind::KeywordAsVariable(_)));
    }

    #[test]
    fn deep_nesting_is_an_error_not_a_crash() {
        let deep = "(".repeat(10_000) + "[a]" + &")".repeat(10_000);
        assert_eq!(parse(&deep).unwrap_err().kind, ParseErrorKind::TooDeep);
        let deep_term = format!("[{}a{}]", "(".repeat(5_000), ")".repeat(5_000));
        assert_eq!(parse(&deep_term).unwrap_err().kind, ParseErrorKind::TooDeep);
        let nots = format!("[{}a]", "not ".repeat(5_000));
        assert_eq!(parse(&nots).unwrap_err().kind, ParseErrorKind::TooDeep);
    }
}
