//! Source positions and user-facing diagnostics.
//!
//! Every AST node carries a [`Span`]; all front-half errors (lexing,
//! parsing, semantic analysis) are reported as [`Diagnostic`]s so the CLI
//! can print them uniformly as `file:line:col: severity: message`.

use std::fmt;

/// Half-open byte range into the source, plus the 1-based line/column of
/// its start. Line/column are precomputed so diagnostics never need the
/// source text to render a position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(start: usize, end: usize, line: u32, col: u32) -> Self {
        Span { start, end, line, col }
    }

    /// Span covering `self` through `other` (keeps self's position).
    pub fn to(self, other: Span) -> Span {
        Span { start: self.start, end: other.end.max(self.end), ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Error => write!(f, "error"),
            Severity::Warning => write!(f, "warning"),
        }
    }
}

/// A positioned message. `hint` is an optional follow-up line suggesting a
/// fix; it renders indented under the main message.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub span: Span,
    pub hint: Option<String>,
}

impl Diagnostic {
    pub fn error(message: impl Into<String>, span: Span) -> Self {
        Diagnostic { severity: Severity::Error, message: message.into(), span, hint: None }
    }

    pub fn warning(message: impl Into<String>, span: Span) -> Self {
        Diagnostic { severity: Severity::Warning, message: message.into(), span, hint: None }
    }

    pub fn with_hint(mut self, hint: impl Into<String>) -> Self {
        self.hint = Some(hint.into());
        self
    }

    /// Render as `file:line:col: severity: message`.
    pub fn render(&self, file: &str) -> String {
        let mut s = format!(
            "{}:{}:{}: {}: {}",
            file, self.span.line, self.span.col, self.severity, self.message
        );
        if let Some(h) = &self.hint {
            s.push_str("\n    hint: ");
            s.push_str(h);
        }
        s
    }
}

/// Accumulator used by passes that report multiple problems before giving up.
#[derive(Debug, Default, Clone)]
pub struct Diagnostics {
    pub items: Vec<Diagnostic>,
}

impl Diagnostics {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, d: Diagnostic) {
        self.items.push(d);
    }

    pub fn error(&mut self, message: impl Into<String>, span: Span) {
        self.push(Diagnostic::error(message, span));
    }

    pub fn warning(&mut self, message: impl Into<String>, span: Span) {
        self.push(Diagnostic::warning(message, span));
    }

    pub fn has_errors(&self) -> bool {
        self.items.iter().any(|d| d.severity == Severity::Error)
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn extend(&mut self, other: Diagnostics) {
        self.items.extend(other.items);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_position_and_severity() {
        let d = Diagnostic::error("unexpected token", Span::new(4, 5, 2, 7));
        assert_eq!(d.render("prog.qmod"), "prog.qmod:2:7: error: unexpected token");
    }

    #[test]
    fn renders_hint_on_second_line() {
        let d = Diagnostic::error("logical 'and' needs 1-bit operands", Span::new(0, 1, 1, 1))
            .with_hint("use '&' for bitwise or '<'/'==' to form a boolean");
        let r = d.render("x.qmod");
        assert!(r.contains("error: logical 'and'"));
        assert!(r.lines().nth(1).unwrap().trim_start().starts_with("hint:"));
    }
}
