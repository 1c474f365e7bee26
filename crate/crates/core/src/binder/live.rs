//! Live candidate search: Wikipedia full-text search as a proxy for the event
//! label, Wikidata entity data for the hits. Every response is cached on disk.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use chrono::NaiveDate;
use serde_json::Value;

use super::score::{ScoreParams, Scorer};
use super::snapshot::{KgClaim, KgEntity, HAS_PART, PART_OF};
use super::{BindError, KgSource};
use crate::ids;
use crate::model::{Granularity, KgCandidate, TimeSpec};
use crate::net::HttpClient;
use crate::semantics::EmbeddingBackend;

pub const WIKIPEDIA_API: &str = "https://en.wikipedia.org/w/api.php";
pub const WIKIDATA_ENTITY_DATA: &str = "https://www.wikidata.org/wiki/Special:EntityData";

pub struct LiveSource<'a> {
    client: HttpClient,
    cache_dir: PathBuf,
    search_url: String,
    entity_url: String,
    scorer: Scorer<'a>,
}

impl<'a> LiveSource<'a> {
    pub fn new(
        cache_dir: &Path,
        timeout: Duration,
        retries: u32,
        embed: Option<&'a dyn EmbeddingBackend>,
        params: ScoreParams,
    ) -> Result<Self, BindError> {
        fs::create_dir_all(cache_dir).map_err(|e| BindError::SourceUnavailable(format!("{}: {e}", cache_dir.display())))?;
        Ok(Self {
            client: HttpClient::new(timeout, retries),
            cache_dir: cache_dir.to_owned(),
            search_url: WIKIPEDIA_API.to_owned(),
            entity_url: WIKIDATA_ENTITY_DATA.to_owned(),
            scorer: Scorer { embed, params },
        })
    }

    pub fn with_endpoints(mut self, search_url: &str, entity_url: &str) -> Self {
        self.search_url = search_url.to_owned();
        self.entity_url = entity_url.trim_end_matches('/').to_owned();
        self
    }

    fn get(&self, url: &str, query: &[(&str, &str)]) -> Result<Value, BindError> {
        let mut parts = vec![url];
        for (k, v) in query {
            parts.push(k);
            parts.push(v);
        }
        let path = self.cache_dir.join(format!("{}.json", ids::digest(&parts)));
        if let Ok(text) = fs::read_to_string(&path) {
            if let Ok(v) = serde_json::from_str(&text) {
                return Ok(v);
            }
        }
        let value = self
            .client
            .get_json(url, query)
            .map_err(|e| BindError::SourceUnavailable(e.to_string()))?;
        let tmp = path.with_extension(format!("{}.tmp", std::process::id()));
        fs::write(&tmp, value.to_string())
            .and_then(|_| fs::rename(&tmp, &path))
            .map_err(|e| BindError::SourceUnavailable(format!("{}: {e}", path.display())))?;
        Ok(value)
    }

    /// Wikidata ids of the top search hits, in search order.
    fn search_ids(&self, label: &str) -> Result<Vec<String>, BindError> {
        let limit = self.scorer.params.top_k.max(1).to_string();
        let reply = self.get(
            &self.search_url,
            &[
                ("action", "query"),
                ("format", "json"),
                ("formatversion", "2"),
                ("generator", "search"),
                ("gsrsearch", label),
                ("gsrlimit", &limit),
                ("prop", "pageprops"),
                ("ppprop", "wikibase_item"),
            ],
        )?;
        let mut pages: Vec<(i64, String)> = reply
            .pointer("/query/pages")
            .and_then(Value::as_array)
            .into_iter()
            .flatten()
            .filter_map(|p| {
                let id = p.pointer("/pageprops/wikibase_item")?.as_str()?.to_owned();
                Some((p.get("index").and_then(Value::as_i64).unwrap_or(i64::MAX), id))
            })
            .collect();
        pages.sort();
        let mut ids: Vec<String> = Vec::new();
        for (_, id) in pages {
            if !ids.contains(&id) {
                ids.push(id);
            }
        }
        Ok(ids)
    }
}

fn wikidata_date(v: &Value) -> Option<(NaiveDate, Granularity)> {
    let value = v.pointer("/mainsnak/datavalue/value")?;
    let time = value.get("time")?.as_str()?;
    let precision = value.get("precision")?.as_i64()?;
    let body = time.trim_start_matches('+');
    let mut it = body.split(['-', 'T']);
    let year: i32 = it.next()?.parse().ok()?;
    let month: u32 = it.next()?.parse().ok()?;
    let day: u32 = it.next()?.parse().ok()?;
    let granularity = match precision {
        p if p >= 11 => Granularity::Day,
        10 => Granularity::Month,
        9 => Granularity::Year,
        _ => return None,
    };
    let date = NaiveDate::from_ymd_opt(year, month.max(1), day.max(1))?;
    Some((date, granularity))
}

fn first_date(claims: &Value, property: &str) -> Option<(NaiveDate, Granularity)> {
    claims.get(property)?.as_array()?.iter().find_map(wikidata_date)
}

fn spec_at(date: NaiveDate, g: Granularity) -> Option<TimeSpec> {
    use chrono::Datelike;
    match g {
        Granularity::Day => Some(TimeSpec::day(date)),
        Granularity::Month => TimeSpec::month(date.year(), date.month()),
        Granularity::Year => Some(TimeSpec::year(date.year())),
    }
}

/// Converts Wikidata entity JSON into the fields the binder uses: English
/// label, aliases and description, time from P585 or P580/P582, and P361 /
/// P527 links.
pub fn parse_entity(id: &str, data: &Value) -> Option<KgEntity> {
    let e = data.pointer(&format!("/entities/{id}"))?;
    let label = e.pointer("/labels/en/value")?.as_str()?.to_owned();
    let aliases = e
        .pointer("/aliases/en")
        .and_then(Value::as_array)
        .into_iter()
        .flatten()
        .filter_map(|a| a.get("value")?.as_str().map(str::to_owned))
        .collect();
    let description = e
        .pointer("/descriptions/en/value")
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_owned();
    let claims = e.get("claims").cloned().unwrap_or(Value::Null);
    let time = match (first_date(&claims, "P585"), first_date(&claims, "P580"), first_date(&claims, "P582")) {
        (Some((d, g)), _, _) => spec_at(d, g),
        (None, Some((s, gs)), Some((t, gt))) => TimeSpec::interval(s, t, gs.max(gt)),
        (None, Some((s, g)), None) => spec_at(s, g),
        _ => None,
    };
    let mut links = Vec::new();
    for (property, predicate) in [("P361", PART_OF), ("P527", HAS_PART)] {
        for claim in claims.get(property).and_then(Value::as_array).into_iter().flatten() {
            if let Some(object) = claim.pointer("/mainsnak/datavalue/value/id").and_then(Value::as_str) {
                links.push(KgClaim {
                    predicate: predicate.to_owned(),
                    object: object.to_owned(),
                    attribution: None,
                });
            }
        }
    }
    Some(KgEntity {
        label,
        aliases,
        description,
        time,
        claims: links,
    })
}

impl KgSource for LiveSource<'_> {
    fn search(&self, label: &str, time: &TimeSpec) -> Result<Vec<KgCandidate>, BindError> {
        if label.trim().is_empty() {
            return Err(BindError::EmptyLabel);
        }
        let mut entities = Vec::new();
        for id in self.search_ids(label)? {
            if let Some(e) = self.entity(&id)? {
                entities.push((id, e));
            }
        }
        Ok(self
            .scorer
            .rank(label, time, entities.iter().map(|(id, e)| (id.as_str(), e))))
    }

    fn entity(&self, kg_id: &str) -> Result<Option<KgEntity>, BindError> {
        let data = self.get(&format!("{}/{kg_id}.json", self.entity_url), &[])?;
        Ok(parse_entity(kg_id, &data))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;
    use std::io::{BufRead, BufReader, Write};
    use std::net::TcpListener;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    fn entity_json(id: &str, label: &str) -> Value {
        json!({"entities": {id: {
            "labels": {"en": {"value": label}},
            "aliases": {"en": [{"value": "War in Iraq"}]},
            "descriptions": {"en": {"value": "2003-2011 war"}},
            "claims": {
                "P580": [{"mainsnak": {"datavalue": {"value": {"time": "+2003-03-20T00:00:00Z", "precision": 11}}}}],
                "P582": [{"mainsnak": {"datavalue": {"value": {"time": "+2011-12-18T00:00:00Z", "precision": 11}}}}],
                "P527": [{"mainsnak": {"datavalue": {"value": {"id": "Q107802"}}}}]
            }
        }}})
    }

    #[test]
    fn parses_entity_data() {
        let e = parse_entity("Q545449", &entity_json("Q545449", "Iraq War")).unwrap();
        assert_eq!(e.label, "Iraq War");
        assert_eq!(e.aliases, vec!["War in Iraq"]);
        assert_eq!(e.time.unwrap().to_string(), "2003-03-20 to 2011-12-18");
        assert_eq!(e.claims[0].predicate, HAS_PART);
        let year = json!({"mainsnak": {"datavalue": {"value": {"time": "+1999-00-00T00:00:00Z", "precision": 9}}}});
        assert_eq!(wikidata_date(&year).unwrap().1, Granularity::Year);
    }

    /// Answers search and entity requests; counts requests served.
    fn serve(count: Arc<AtomicUsize>) -> String {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { break };
                let mut reader = BufReader::new(stream);
                let mut first = String::new();
                reader.read_line(&mut first).unwrap();
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                }
                count.fetch_add(1, Ordering::SeqCst);
                let body = if first.contains("/api.php") {
                    json!({"query": {"pages": [
                        {"title": "Iraq War", "index": 1, "pageprops": {"wikibase_item": "Q545449"}},
                        {"title": "No item", "index": 2}
                    ]}})
                } else {
                    entity_json("Q545449", "Iraq War")
                }
                .to_string();
                let mut stream = reader.into_inner();
                write!(
                    stream,
                    "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                )
                .unwrap();
            }
        });
        base
    }

    #[test]
    fn searches_and_caches() {
        let count = Arc::new(AtomicUsize::new(0));
        let base = serve(count.clone());
        let dir = tempfile::tempdir().unwrap();
        let source = LiveSource::new(dir.path(), Duration::from_secs(5), 0, None, ScoreParams::default())
            .unwrap()
            .with_endpoints(&format!("{base}/w/api.php"), &format!("{base}/wiki/Special:EntityData"));
        let span = TimeSpec::years(2003, 2011).unwrap();
        let c = source.search("Iraq War", &span).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].kg_id, "Q545449");
        assert_eq!(c[0].score, 1.0);
        assert_eq!(count.load(Ordering::SeqCst), 2);
        // second run is served from the cache
        let again = source.search("Iraq War", &span).unwrap();
        assert_eq!(again, c);
        assert_eq!(count.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn unreachable_source() {
        let dir = tempfile::tempdir().unwrap();
        let source = LiveSource::new(dir.path(), Duration::from_millis(300), 0, None, ScoreParams::default())
            .unwrap()
            .with_endpoints("http://127.0.0.1:9/api.php", "http://127.0.0.1:9/e");
        assert!(matches!(
            source.search("Iraq War", &TimeSpec::unknown()),
            Err(BindError::SourceUnavailable(_))
        ));
    }
}
