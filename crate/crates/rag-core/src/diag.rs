//! Diagnostics: stable codes, severities, spans, and rendering.
//!
//! Every diagnostic the frontend or validator can emit carries a code from
//! the published table in `docs/diagnostics.md`; the `codes` module is the
//! machine-readable side of that table.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::span::SourceSpan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Error => write!(f, "error"),
            Severity::Warning => write!(f, "warning"),
        }
    }
}

/// One reported problem. `span` is present whenever the graph was derived
/// from source text; programmatically built graphs may have none.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub span: Option<SourceSpan>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hint: Option<String>,
}

impl Diagnostic {
    pub fn error(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            code,
            message: message.into(),
            span: None,
            hint: None,
        }
    }

    pub fn warning(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            code,
            message: message.into(),
            span: None,
            hint: None,
        }
    }

    pub fn with_span(mut self, span: SourceSpan) -> Self {
        self.span = Some(span);
        self
    }

    pub fn with_opt_span(mut self, span: Option<SourceSpan>) -> Self {
        self.span = span;
        self
    }

    pub fn with_hint(mut self, hint: impl Into<String>) -> Self {
        self.hint = Some(hint.into());
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// Render in the conventional compiler style:
    ///
    /// ```text
    /// error[E012]: unknown item `bcon`
    ///   --> breakfast.rag:14:8
    ///   hint: did you mean `bacon`?
    /// ```
    pub fn render(&self) -> String {
        let mut out = format!("{}[{}]: {}", self.severity, self.code, self.message);
        if let Some(span) = &self.span {
            out.push_str(&format!("\n  --> {span}"));
        }
        if let Some(hint) = &self.hint {
            out.push_str(&format!("\n  hint: {hint}"));
        }
        out
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

/// True when at least one diagnostic is an error.
pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}

/// Canonical order for reported diagnostics: code, then span, then message.
pub fn sort_canonical(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| {
        a.code
            .cmp(b.code)
            .then_with(|| {
                let ka = a.span.as_ref().map(SourceSpan::order_key);
                let kb = b.span.as_ref().map(SourceSpan::order_key);
                ka.cmp(&kb)
            })
            .then_with(|| a.message.cmp(&b.message))
    });
}

/// The published diagnostic codes. Lexer and parser codes are `E…`,
/// validator checks are `V…`.
pub mod codes {
    // Lexing
    pub const UNKNOWN_CHAR: &str = "E001";
    pub const UNTERMINATED_STRING: &str = "E002";
    pub const MALFORMED_NUMBER: &str = "E003";
    // Parsing
    pub const UNEXPECTED_TOKEN: &str = "E010";
    pub const DUPLICATE_DEFINITION: &str = "E011";
    pub const UNRESOLVED_REFERENCE: &str = "E012";
    pub const DUPLICATE_FIELD: &str = "E013";
    pub const UNKNOWN_FIELD: &str = "E014";
    pub const INVALID_VALUE: &str = "E015";
    pub const MISSING_FIELD: &str = "E016";
    pub const INVALID_VERSION: &str = "E017";
    pub const IMPORT_FAILED: &str = "E018";
    pub const IMPORT_CYCLE: &str = "E019";
    // Validation (one code per global check)
    pub const ACYCLICITY: &str = "V001";
    pub const TYPE_SAFETY: &str = "V002";
    pub const SINGLE_OUTPUT: &str = "V003";
    pub const ROOT_RULE: &str = "V004";
    pub const TRANSFER_SHAPE: &str = "V005";
    pub const ENVIRONMENT_COMPUTABILITY: &str = "V006";
    pub const FROM_BEFORE_TO: &str = "V007";
    pub const INTERJECTION_SANITY: &str = "V008";
    pub const PLUGIN_CLOSURE: &str = "V009";

    /// Every code this crate can emit, in table order.
    pub const ALL: &[&str] = &[
        UNKNOWN_CHAR,
        UNTERMINATED_STRING,
        MALFORMED_NUMBER,
        UNEXPECTED_TOKEN,
        DUPLICATE_DEFINITION,
        UNRESOLVED_REFERENCE,
        DUPLICATE_FIELD,
        UNKNOWN_FIELD,
        INVALID_VALUE,
        MISSING_FIELD,
        INVALID_VERSION,
        IMPORT_FAILED,
        IMPORT_CYCLE,
        ACYCLICITY,
        TYPE_SAFETY,
        SINGLE_OUTPUT,
        ROOT_RULE,
        TRANSFER_SHAPE,
        ENVIRONMENT_COMPUTABILITY,
        FROM_BEFORE_TO,
        INTERJECTION_SANITY,
        PLUGIN_CLOSURE,
    ];
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_includes_code_span_and_hint() {
        let d = Diagnostic::error(codes::UNRESOLVED_REFERENCE, "unknown item `bcon`")
            .with_span(SourceSpan::point("breakfast.rag", 14, 8))
            .with_hint("did you mean `bacon`?");
        let text = d.render();
        assert!(text.contains("error[E012]"));
        assert!(text.contains("breakfast.rag:14:8"));
        assert!(text.contains("did you mean `bacon`?"));
    }

    #[test]
    fn canonical_sort_orders_by_code_then_span() {
        let mut diags = vec![
            Diagnostic::error(codes::UNEXPECTED_TOKEN, "b").with_span(SourceSpan::point("f", 9, 1)),
            Diagnostic::error(codes::UNKNOWN_CHAR, "a").with_span(SourceSpan::point("f", 20, 1)),
            Diagnostic::error(codes::UNEXPECTED_TOKEN, "c").with_span(SourceSpan::point("f", 2, 1)),
        ];
        sort_canonical(&mut diags);
        assert_eq!(diags[0].code, codes::UNKNOWN_CHAR);
        assert_eq!(diags[1].message, "c");
        assert_eq!(diags[2].message, "b");
    }

    #[test]
    fn all_codes_are_unique() {
        let mut seen = std::collections::BTreeSet::new();
        for code in codes::ALL {
            assert!(seen.insert(code), "duplicate diagnostic code {code}");
        }
    }
}
