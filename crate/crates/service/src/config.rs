use std::net::{IpAddr, Ipv4Addr};
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

use crate::session::DEFAULT_HISTORY_CAP;

pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_SESSION_TTL: Duration = Duration::from_secs(30 * 60);
pub const DEFAULT_MAX_IMAGE_DIM: usize = 2048;
pub const DEFAULT_BODY_LIMIT: usize = 64 * 1024 * 1024;

/// What a mutating request does when its session is already mid-edit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BusyMode {
    /// Queue behind the running edit.
    #[default]
    Wait,
    /// Answer 409 Conflict immediately.
    Reject,
}

impl FromStr for BusyMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "wait" => Ok(Self::Wait),
            "reject" => Ok(Self::Reject),
            other => Err(format!("unknown busy mode `{other}` (expected wait or reject)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub model_path: PathBuf,
    pub host: IpAddr,
    pub port: u16,
    pub session_ttl: Duration,
    pub history_cap: usize,
    pub max_image_dim: usize,
    pub busy_mode: BusyMode,
    /// Directory served for any path outside `/api`.
    pub static_dir: Option<PathBuf>,
    /// When set, every mutation writes `<id>.json` here.
    pub snapshot_dir: Option<PathBuf>,
    pub body_limit: usize,
}

impl ServiceConfig {
    pub fn new(model_path: impl Into<PathBuf>) -> Self {
        Self {
            model_path: model_path.into(),
            host: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: DEFAULT_PORT,
            session_ttl: DEFAULT_SESSION_TTL,
            history_cap: DEFAULT_HISTORY_CAP,
            max_image_dim: DEFAULT_MAX_IMAGE_DIM,
            busy_mode: BusyMode::default(),
            static_dir: None,
            snapshot_dir: None,
            body_limit: DEFAULT_BODY_LIMIT,
        }
    }

    /// Overrides fields from `WHATIF_*` environment variables:
    /// `WHATIF_MODEL`, `WHATIF_HOST`, `WHATIF_PORT`, `WHATIF_SESSION_TTL_SECS`,
    /// `WHATIF_HISTORY_CAP`, `WHATIF_MAX_IMAGE_DIM`, `WHATIF_BUSY_MODE`,
    /// `WHATIF_STATIC_DIR` and `WHATIF_SNAPSHOT_DIR`.
    pub fn apply_env(mut self) -> Result<Self, String> {
        fn parse<T: FromStr>(key: &str) -> Result<Option<T>, String>
        where
            T::Err: std::fmt::Display,
        {
            match std::env::var(key) {
                Ok(v) => v.parse().map(Some).map_err(|e| format!("{key}={v}: {e}")),
                Err(_) => Ok(None),
            }
        }

        if let Some(p) = parse::<PathBuf>("WHATIF_MODEL")? {
            self.model_path = p;
        }
        if let Some(h) = parse("WHATIF_HOST")? {
            self.host = h;
        }
        if let Some(p) = parse("WHATIF_PORT")? {
            self.port = p;
        }
        if let Some(s) = parse("WHATIF_SESSION_TTL_SECS")? {
            self.session_ttl = Duration::from_secs(s);
        }
        if let Some(c) = parse("WHATIF_HISTORY_CAP")? {
            self.history_cap = c;
        }
        if let Some(d) = parse("WHATIF_MAX_IMAGE_DIM")? {
            self.max_image_dim = d;
        }
        if let Some(m) = parse("WHATIF_BUSY_MODE")? {
            self.busy_mode = m;
        }
        if let Some(d) = parse::<PathBuf>("WHATIF_STATIC_DIR")? {
            self.static_dir = Some(d);
        }
        if let Some(d) = parse::<PathBuf>("WHATIF_SNAPSHOT_DIR")? {
            self.snapshot_dir = Some(d);
        }
        Ok(self)
    }
}
