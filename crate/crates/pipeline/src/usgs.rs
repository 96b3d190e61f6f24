//! Client for the USGS NWIS daily-values service.
//!
//! One request per station, so a bad station cannot take down the rest of
//! a study. Raw response bodies are cached on disk under the SHA-256 of the
//! request URL; in offline mode only the cache is consulted.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{PipelineError, Result};

pub const NWIS_DV_URL: &str = "https://waterservices.usgs.gov/nwis/dv/";
/// Daily mean discharge, cubic feet per second.
pub const DISCHARGE_PARAMETER: &str = "00060";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyValue {
    pub date: NaiveDate,
    /// `None` for missing, flagged or negative readings.
    pub discharge: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationSeries {
    pub id: String,
    pub name: String,
    pub longitude: f64,
    pub latitude: f64,
    /// Strictly increasing dates.
    pub values: Vec<DailyValue>,
}

impl StationSeries {
    /// Canonical text form: a `#` header line with the station metadata,
    /// then `date,discharge` rows with empty discharge for missing days.
    pub fn to_normalized_csv(&self) -> String {
        let mut out = format!(
            "# {} {} lon={} lat={}\ndate,discharge\n",
            self.id, self.name, self.longitude, self.latitude
        );
        for v in &self.values {
            match v.discharge {
                Some(q) => out.push_str(&format!("{},{q}\n", v.date)),
                None => out.push_str(&format!("{},\n", v.date)),
            }
        }
        out
    }
}

fn parse_err(station: &str, message: impl Into<String>) -> PipelineError {
    PipelineError::Fetch {
        station: station.to_string(),
        message: message.into(),
    }
}

/// Parses a WaterML-JSON daily-values response for `station`.
pub fn parse_nwis_json(station: &str, body: &str) -> Result<StationSeries> {
    let root: Value = serde_json::from_str(body).map_err(|e| parse_err(station, format!("malformed JSON: {e}")))?;
    let series = root
        .pointer("/value/timeSeries")
        .and_then(Value::as_array)
        .ok_or_else(|| parse_err(station, "response has no timeSeries"))?;
    let ts = series
        .iter()
        .find(|t| t.pointer("/variable/variableCode/0/value").and_then(Value::as_str) == Some(DISCHARGE_PARAMETER))
        .ok_or_else(|| parse_err(station, "no discharge series in response"))?;

    let info = ts
        .get("sourceInfo")
        .ok_or_else(|| parse_err(station, "missing sourceInfo"))?;
    let id = info
        .pointer("/siteCode/0/value")
        .and_then(Value::as_str)
        .unwrap_or(station)
        .to_string();
    let name = info.get("siteName").and_then(Value::as_str).unwrap_or("").to_string();
    let coord = |k: &str| {
        info.pointer(&format!("/geoLocation/geogLocation/{k}"))
            .and_then(Value::as_f64)
            .ok_or_else(|| parse_err(station, format!("missing {k}")))
    };
    let (longitude, latitude) = (coord("longitude")?, coord("latitude")?);
    let no_data = ts.pointer("/variable/noDataValue").and_then(Value::as_f64);

    let raw = ts
        .pointer("/values/0/value")
        .and_then(Value::as_array)
        .ok_or_else(|| parse_err(station, "missing values"))?;
    let mut values = Vec::with_capacity(raw.len());
    for v in raw {
        let stamp = v
            .get("dateTime")
            .and_then(Value::as_str)
            .ok_or_else(|| parse_err(station, "value without dateTime"))?;
        let date = stamp
            .get(..10)
            .and_then(|d| NaiveDate::parse_from_str(d, "%Y-%m-%d").ok())
            .ok_or_else(|| parse_err(station, format!("bad date {stamp:?}")))?;
        let q = v
            .get("value")
            .and_then(|x| {
                x.as_str()
                    .map(str::to_string)
                    .or_else(|| x.as_f64().map(|f| f.to_string()))
            })
            .and_then(|s| s.trim().parse::<f64>().ok())
            .filter(|q| q.is_finite() && *q >= 0.0 && Some(*q) != no_data);
        values.push(DailyValue { date, discharge: q });
    }
    values.sort_by_key(|v| v.date);
    if values.windows(2).any(|w| w[0].date == w[1].date) {
        return Err(parse_err(station, "duplicate dates"));
    }
    Ok(StationSeries {
        id,
        name,
        longitude,
        latitude,
        values,
    })
}

/// Source of response bodies; the HTTP implementation is [`HttpTransport`].
pub trait Transport: Sync {
    fn get(&self, url: &str) -> std::result::Result<String, String>;
}

pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .user_agent(concat!("exceedmix/", env!("CARGO_PKG_VERSION")))
            .build()
            .map_err(|e| PipelineError::Config(format!("http client: {e}")))?;
        Ok(Self { client })
    }
}

impl Transport for HttpTransport {
    fn get(&self, url: &str) -> std::result::Result<String, String> {
        let resp = self.client.get(url).send().map_err(|e| e.to_string())?;
        let status = resp.status();
        if !status.is_success() {
            return Err(format!("HTTP {status}"));
        }
        resp.text().map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone)]
pub struct NwisClient {
    pub base_url: String,
    pub cache_dir: Option<PathBuf>,
    pub offline: bool,
    pub max_connections: usize,
    pub attempts: u32,
    /// First retry delay; doubled on each further retry.
    pub backoff: Duration,
}

impl Default for NwisClient {
    fn default() -> Self {
        Self {
            base_url: NWIS_DV_URL.to_string(),
            cache_dir: None,
            offline: false,
            max_connections: 4,
            attempts: 3,
            backoff: Duration::from_millis(500),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FetchFailure {
    pub station: String,
    pub message: String,
}

/// Parsed series in request order plus per-station failures.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FetchReport {
    pub series: Vec<StationSeries>,
    pub failures: Vec<FetchFailure>,
    pub requests: usize,
    pub cache_hits: usize,
}

/// Hex SHA-256 of a request URL.
pub fn cache_key(url: &str) -> String {
    Sha256::digest(url.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl NwisClient {
    pub fn request_url(&self, station: &str, start: NaiveDate, end: NaiveDate) -> String {
        format!(
            "{}?sites={station}&startDT={start}&endDT={end}&parameterCd={DISCHARGE_PARAMETER}&format=json",
            self.base_url
        )
    }

    pub fn cache_path(&self, url: &str) -> Option<PathBuf> {
        self.cache_dir
            .as_ref()
            .map(|d| d.join(format!("{}.json", cache_key(url))))
    }

    /// Body for `url`: from the cache if present, otherwise from the
    /// transport with retries. Returns (body, was_cached, requests_made).
    fn body(&self, transport: &dyn Transport, url: &str) -> (std::result::Result<String, String>, bool, usize) {
        if let Some(p) = self.cache_path(url) {
            if let Ok(b) = std::fs::read_to_string(&p) {
                return (Ok(b), true, 0);
            }
        }
        if self.offline {
            return (Err("not in cache (offline mode)".into()), false, 0);
        }
        let mut last = String::new();
        for a in 0..self.attempts.max(1) {
            if a > 0 {
                std::thread::sleep(self.backoff * 2u32.pow(a - 1));
            }
            match transport.get(url) {
                Ok(b) => return (Ok(b), false, a as usize + 1),
                Err(e) => {
                    log::warn!("request {url} failed (attempt {}): {e}", a + 1);
                    last = e;
                }
            }
        }
        (Err(last), false, self.attempts.max(1) as usize)
    }

    fn fetch_one(
        &self,
        transport: &dyn Transport,
        station: &str,
        start: NaiveDate,
        end: NaiveDate,
    ) -> (Result<StationSeries>, bool, usize) {
        let url = self.request_url(station, start, end);
        let (body, cached, requests) = self.body(transport, &url);
        let parsed = body.map_err(|m| parse_err(station, m)).and_then(|b| {
            let s = parse_nwis_json(station, &b)?;
            if !cached {
                if let Some(p) = self.cache_path(&url) {
                    write_atomic(&p, &b)?;
                }
            }
            Ok(s)
        });
        (parsed, cached, requests)
    }

    /// Fetches every station, at most `max_connections` at a time.
    pub fn fetch_with(
        &self,
        transport: &dyn Transport,
        stations: &[String],
        start: NaiveDate,
        end: NaiveDate,
    ) -> FetchReport {
        if stations.is_empty() {
            return FetchReport::default();
        }
        let slots: Vec<Mutex<Option<(Result<StationSeries>, bool, usize)>>> =
            stations.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = self.max_connections.clamp(1, stations.len());
        std::thread::scope(|sc| {
            for _ in 0..workers {
                sc.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= stations.len() {
                        break;
                    }
                    let r = self.fetch_one(transport, &stations[i], start, end);
                    *slots[i].lock().expect("slot lock") = Some(r);
                });
            }
        });
        let mut report = FetchReport::default();
        for (slot, station) in slots.into_iter().zip(stations) {
            let (r, cached, requests) = slot.into_inner().expect("slot lock").expect("every station visited");
            report.requests += requests;
            report.cache_hits += cached as usize;
            match r {
                Ok(s) => report.series.push(s),
                Err(e) => report.failures.push(FetchFailure {
                    station: station.clone(),
                    message: e.to_string(),
                }),
            }
        }
        report
    }

    pub fn fetch(&self, stations: &[String], start: NaiveDate, end: NaiveDate) -> Result<FetchReport> {
        if stations.is_empty() {
            return Ok(FetchReport::default());
        }
        let transport = HttpTransport::new(Duration::from_secs(60))?;
        Ok(self.fetch_with(&transport, stations, start, end))
    }
}

fn write_atomic(path: &std::path::Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("json.part");
    std::fs::write(&tmp, body)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Builds a WaterML-JSON body in the shape the service returns; used for
/// fixtures and synthetic caches.
pub fn nwis_json_body(s: &StationSeries) -> String {
    let values: Vec<Value> = s
        .values
        .iter()
        .map(|v| {
            serde_json::json!({
                "value": v.discharge.map_or_else(|| "-999999".to_string(), |q| format!("{q}")),
                "qualifiers": ["A"],
                "dateTime": format!("{}T00:00:00.000", v.date),
            })
        })
        .collect();
    serde_json::json!({
        "name": "ns1:timeSeriesResponseType",
        "value": {
            "timeSeries": [{
                "sourceInfo": {
                    "siteName": s.name,
                    "siteCode": [{"value": s.id, "network": "NWIS", "agencyCode": "USGS"}],
                    "geoLocation": {"geogLocation": {"srs": "EPSG:4326", "latitude": s.latitude, "longitude": s.longitude}},
                },
                "variable": {
                    "variableCode": [{"value": DISCHARGE_PARAMETER, "network": "NWIS"}],
                    "variableName": "Streamflow, ft&#179;/s",
                    "noDataValue": -999999.0,
                },
                "values": [{"value": values}],
                "name": format!("USGS:{}:{DISCHARGE_PARAMETER}:00003", s.id),
            }]
        }
    })
    .to_string()
}
