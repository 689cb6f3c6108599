use std::fmt;
use std::str::FromStr;

/// Individually switchable defences. All on by default; the harness turns
/// single ones off to show each is load-bearing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mitigations {
    pub pkce: bool,
    /// Client-side issuer validation of authorization responses.
    pub iss_check: bool,
    pub sender_proof: bool,
    pub replay_cache: bool,
    pub audience_check: bool,
    pub rate_limit: bool,
    pub csp_header: bool,
    /// Proof key must hash to the registered key / token cnf.
    pub binding: bool,
}

impl Default for Mitigations {
    fn default() -> Self {
        Self {
            pkce: true,
            iss_check: true,
            sender_proof: true,
            replay_cache: true,
            audience_check: true,
            rate_limit: true,
            csp_header: true,
            binding: true,
        }
    }
}

impl Mitigations {
    pub fn without(mut self, fault: Fault) -> Self {
        match fault {
            Fault::Pkce => self.pkce = false,
            Fault::IssCheck => self.iss_check = false,
            Fault::SenderProof => self.sender_proof = false,
            Fault::ReplayCache => self.replay_cache = false,
            Fault::AudienceCheck => self.audience_check = false,
            Fault::RateLimit => self.rate_limit = false,
            Fault::CspHeader => self.csp_header = false,
            Fault::Binding => self.binding = false,
        }
        self
    }
}

/// Name of a mitigation that can be disabled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Fault {
    Pkce,
    IssCheck,
    SenderProof,
    ReplayCache,
    AudienceCheck,
    RateLimit,
    CspHeader,
    Binding,
}

impl Fault {
    pub const ALL: [Fault; 8] = [
        Fault::Pkce,
        Fault::IssCheck,
        Fault::SenderProof,
        Fault::ReplayCache,
        Fault::AudienceCheck,
        Fault::RateLimit,
        Fault::CspHeader,
        Fault::Binding,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Fault::Pkce => "pkce",
            Fault::IssCheck => "iss-check",
            Fault::SenderProof => "sender-proof",
            Fault::ReplayCache => "replay-cache",
            Fault::AudienceCheck => "audience-check",
            Fault::RateLimit => "rate-limit",
            Fault::CspHeader => "csp-header",
            Fault::Binding => "binding",
        }
    }
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Fault {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Fault::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Fault::ALL.iter().map(Fault::as_str).collect();
                format!("unknown mitigation {s:?}; expected one of {}", names.join(", "))
            })
    }
}
