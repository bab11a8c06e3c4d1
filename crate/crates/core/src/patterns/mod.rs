//! The Splitter, Message Filter, Content Enricher and Feature Detector nets,
//! and channel fusion for chaining them.
//!
//! Every builder exposes `ch_in`/`ch_out` places (prefixed with the
//! configured name prefix) and records them as the net's channels. Builders
//! go through the net-definition syntax, so [`write_net`] of a built pattern
//! loads back to the same net.

use thiserror::Error;

use crate::media::{COLORS, SHAPES};
use crate::net::Net;
use crate::text::{parse_net, write_net};
use crate::types::{format_color, quote};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PatternError {
    #[error("the filter needs at least one accepted tag")]
    NoAcceptedTags,
    #[error("unknown shape `{0}`")]
    UnknownShape(String),
    #[error("unknown color `{0}`")]
    UnknownColor(String),
    #[error("net `{0}` declares no channels")]
    MissingChannels(String),
    #[error("channel type mismatch: upstream ch_out is {upstream}, downstream ch_in is {downstream}")]
    ChannelTypeMismatch { upstream: String, downstream: String },
    #[error("name `{0}` is used by both nets")]
    NameClash(String),
    #[error("action `{0}` is defined differently in the two nets")]
    ActionClash(String),
    #[error("supply for `{0}` differs between the two nets")]
    SupplyClash(String),
}

/// Feature strings shared by all patterns, so that what the detector
/// writes is what the splitter and enricher look for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    pub face: String,
    pub product: String,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary { face: "human face".into(), product: "product".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitterConfig {
    pub prefix: String,
    /// Values supplied for the image-name input `n`.
    pub names: Vec<String>,
}

impl Default for SplitterConfig {
    fn default() -> Self {
        SplitterConfig { prefix: String::new(), names: vec!["f0".into(), "f1".into()] }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FilterConfig {
    pub prefix: String,
    pub accepted: Vec<String>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig { prefix: String::new(), accepted: vec!["human".into(), "product".into()] }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnricherConfig {
    pub prefix: String,
    pub shape: String,
    pub color: String,
}

impl Default for EnricherConfig {
    fn default() -> Self {
        EnricherConfig { prefix: String::new(), shape: "oval".into(), color: "red".into() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DetectorConfig {
    pub prefix: String,
    pub vocabulary: Vocabulary,
}

/// Body of a quoted string, for splicing into a quoted name.
fn escaped(s: &str) -> String {
    let q = quote(s);
    q[1..q.len() - 1].to_string()
}

/// Fills `$P` with the name prefix and `$KEY` placeholders with the given
/// text, then parses. Templates are fixed, so a parse failure is a bug.
fn instantiate(template: &str, prefix: &str, subs: &[(&str, String)]) -> Net {
    let mut src = template.replace("$P", &escaped(prefix));
    for (k, v) in subs {
        src = src.replace(k, v);
    }
    parse_net(&src).unwrap_or_else(|e| panic!("pattern template: {e}\n{src}"))
}

const SPLITTER: &str = r#"
net splitter

actions {
  action getImage(a: oid, seg: rect, a2: oid, id: str, n: str, orig: str) {
    del-mm { (orig::L, mmdb:faceSegment, seg::L) }
    add-mm { (id::L, mmdb:address, a2::L), (id::L, mmdb:format, ".jpg"::L), (id::L, mmdb:name, n::L) }
    add-mo { a2 -> extractIMG(src(a), seg) }
  }
  action cutFromIMG(a: oid, a2: oid) {
    add-mo { a -> sub(src(a), src(a2)) }
  }
}

places {
  place "$Pch_in" : str x oid
  view "$P#Segments" : L x L = "SELECT ?id ?c WHERE { ?id mmdb:faceCount ?c }"
  view "$PSegments" : L x L = "SELECT ?id ?seg WHERE { ?id mmdb:faceSegment ?seg }"
  place "$Pcounter" : str x oid x int
  place "$Pready" : oid x str x oid
  place "$Prepeat" : str x oid
  place "$Pout" : set<str x oid>
  place "$Pemit" : set<str x oid>
  place "$Pch_out" : str x oid
}

transitions {
  transition "$PStart" {
    guard id = id2::str
    in "$Pch_in" (id, a)
    read "$P#Segments" (id2, c)
    out "$Pcounter" (id, a, c::int)
    out "$Prepeat" (id, a)
  }
  transition "$PSplit" {
    guard c > 0 && id = id2::str
    vars { n: str, νid: str, νa: oid }
    in "$Pcounter" (id, a, c)
    in "$Prepeat" (id, a)
    in "$Pout" (s)
    read "$PSegments" (id2, seg)
    out "$Pcounter" (id, a, c - 1)
    out "$Pready" (νa, id, a)
    out "$Pout" (ins(s, νid, νa))
    action getImage(a, seg::rect, νa, νid, n, id)
  }
  transition "$PUpdate Image" {
    in "$Pready" (a2, id, a)
    out "$Prepeat" (id, a)
    action cutFromIMG(a, a2)
  }
  transition "$PFinish1" {
    guard c = 0 && empty(s)
    in "$Pcounter" (id, a, c)
    in "$Prepeat" (id, a)
    in "$Pout" (s)
    out "$Pch_out" (id, a)
  }
  transition "$PFinish2" {
    guard c = 0 && !empty(s)
    in "$Pcounter" (id, a, c)
    in "$Prepeat" (id, a)
    in "$Pout" (s)
    out "$Pemit" (s)
  }
  transition "$PEmit" {
    guard !empty(s)
    in "$Pemit" (s)
    out "$Pemit" (rem(s, getL(s)))
    out "$Pch_out" (getL(s))
  }
}

channels "$Pch_in" -> "$Pch_out"

init {
  token "$Pout" (set<str x oid>{})
  supply n = [$NAMES]
}
"#;

/// Splits an image into its face sub-images. `n` is an external input; the
/// configured names are its supply.
pub fn build_splitter(cfg: &SplitterConfig) -> Net {
    let names = cfg.names.iter().map(|n| quote(n)).collect::<Vec<_>>().join(", ");
    let mut net = instantiate(SPLITTER, &cfg.prefix, &[("$NAMES", names)]);
    if cfg.names.is_empty() {
        net.init.supply.clear();
    }
    net
}

const FILTER: &str = r#"
net filter

places {
  place "$Pch_in" : str x oid
  view "$PImages with Tags" : L x L = "SELECT ?id ?tag WHERE { ?id mmdb:containsObj ?tag }"
  place "$Pch_out" : str x oid
}

transitions {
  transition "$PAccept" {
    guard ($TAGS) && id2::str = id
    in "$Pch_in" (id, a)
    read "$PImages with Tags" (id2, tag)
    out "$Pch_out" (id, a)
  }
  transition "$PDiscard" {
    guard !($TAGS) && id2::str = id
    in "$Pch_in" (id, a)
    read "$PImages with Tags" (id2, tag)
  }
}

channels "$Pch_in" -> "$Pch_out"
"#;

/// Passes on images tagged with one of the accepted tags and drops the rest.
/// An image without any tag is neither accepted nor discarded.
pub fn build_message_filter(cfg: &FilterConfig) -> Result<Net, PatternError> {
    if cfg.accepted.is_empty() {
        return Err(PatternError::NoAcceptedTags);
    }
    let tags = cfg.accepted.iter().map(|t| format!("tag::str = {}", quote(t))).collect::<Vec<_>>().join(" || ");
    Ok(instantiate(FILTER, &cfg.prefix, &[("$TAGS", tags)]))
}

const ENRICHER: &str = r#"
net enricher

actions {
  action updImage(a: oid, seg: rect) {
    add-mo { a -> markIMG(src(a), seg, $SHAPE, $COLOR) }
  }
}

places {
  place "$Pch_in" : str x str x oid
  place "$Pimage" : str x oid
  place "$Pkey" : str x str
  view "$PSegmentsByKey" : L x I x L = "SELECT ?id ?k ?s WHERE { { ?id ?k ?s . FILTER(?k = mmdb:faceSegment) } UNION { ?id ?k ?s . FILTER(?k = mmdb:prodSegment) } }"
  place "$Psegment" : rect x str
  place "$Pch_out" : str x oid
}

transitions {
  transition "$PT" {
    in "$Pch_in" (k, id, a)
    out "$Pimage" (id, a)
    out "$Pkey" (k, id)
  }
  transition "$PGet Segment" {
    guard k2::str = k && id2::str = id
    in "$Pkey" (k, id)
    read "$PSegmentsByKey" (id2, k2, seg)
    out "$Psegment" (seg::rect, id)
  }
  transition "$PEnrich" {
    in "$Pimage" (id, a)
    in "$Psegment" (seg, id)
    out "$Pch_out" (id, a)
    action updImage(a, seg)
  }
}

channels "$Pch_in" -> "$Pch_out"
"#;

/// Marks one segment of the image, selected by key (the full IRI of the
/// segment predicate, e.g. `urn:mmdb:faceSegment`).
pub fn build_content_enricher(cfg: &EnricherConfig) -> Result<Net, PatternError> {
    if !SHAPES.contains(&cfg.shape.as_str()) {
        return Err(PatternError::UnknownShape(cfg.shape.clone()));
    }
    if !COLORS.contains(&cfg.color.as_str()) {
        return Err(PatternError::UnknownColor(cfg.color.clone()));
    }
    Ok(instantiate(ENRICHER, &cfg.prefix, &[("$SHAPE", quote(&cfg.shape)), ("$COLOR", quote(&cfg.color))]))
}

/// Puts a `str x oid` entry in front of the enricher, filling in a fixed
/// key, so it can follow a filter or splitter.
pub fn with_key_adapter(net: &Net, key: &str) -> Result<Net, PatternError> {
    let (cin, cout) = net.channels.clone().ok_or_else(|| PatternError::MissingChannels(net.name.clone()))?;
    let prefix = cin.strip_suffix("ch_in").unwrap_or(&cin).to_string();
    let src = format!(
        "net adapter\nplaces {{\n  place {entry} : str x oid\n  place {cin} : str x str x oid\n}}\n\
         transitions {{\n  transition {t} {{\n    in {entry} (id, a)\n    out {cin} ({key}, id, a)\n  }}\n}}\n",
        entry = quote(&format!("{prefix}keyed_in")),
        cin = quote(&cin),
        t = quote(&format!("{prefix}Add Key")),
        key = quote(key),
    );
    let adapter = parse_net(&src).unwrap_or_else(|e| panic!("adapter template: {e}\n{src}"));
    let mut out = net.clone();
    for (name, p) in adapter.places {
        if name != cin {
            if out.places.contains_key(&name) {
                return Err(PatternError::NameClash(name));
            }
            out.places.insert(name, p);
        }
    }
    for (name, t) in adapter.transitions {
        if out.transitions.contains_key(&name) {
            return Err(PatternError::NameClash(name));
        }
        out.transitions.insert(name, t);
    }
    out.flows.extend(adapter.flows);
    out.channels = Some((format!("{prefix}keyed_in"), cout));
    Ok(out)
}

const DETECTOR: &str = r#"
net detector

actions {
  action addImgCnt(id: str, a: oid) {
    add-mm { (id::L, mmdb:faceCount, countIMGs(src(a), $FACE::L)::L), (id::L, mmdb:prodCount, countIMGs(src(a), $ITEM::L)::L) }
  }
  action updMetadata(id: str, l: I, seg: rect) {
    add-mm { (id::L, l, seg::L) }
  }
}

places {
  place "$Pch_in" : str x oid
  place "$Pdetected" : str x oid
  place "$Pfaces" : str x oid x set<rect>
  place "$Pproducts" : str x oid x set<rect>
  place "$Pch_out" : str x oid
}

transitions {
  transition "$PDetect" {
    in "$Pch_in" (id, a)
    out "$Pdetected" (id, a)
    action addImgCnt(id, a)
  }
  transition "$PGet Face Segments" {
    in "$Pdetected" (id, a)
    out "$Pfaces" (id, a, detectIMG(src(a), $FACE))
  }
  transition "$PUpdate Face Metadata" {
    guard !empty(s)
    in "$Pfaces" (id, a, s)
    out "$Pfaces" (id, a, rem(s, getL(s)))
    action updMetadata(id, mmdb:faceSegment, getL(s))
  }
  transition "$PGet Product Segments" {
    guard empty(s)
    in "$Pfaces" (id, a, s)
    out "$Pproducts" (id, a, detectIMG(src(a), $ITEM))
  }
  transition "$PUpdate Product Metadata" {
    guard !empty(s)
    in "$Pproducts" (id, a, s)
    out "$Pproducts" (id, a, rem(s, getL(s)))
    action updMetadata(id, mmdb:prodSegment, getL(s))
  }
  transition "$PFinish" {
    guard empty(s)
    in "$Pproducts" (id, a, s)
    out "$Pch_out" (id, a)
  }
}

channels "$Pch_in" -> "$Pch_out"
"#;

/// Counts and locates faces, then products, and records both in the metadata.
pub fn build_feature_detector(cfg: &DetectorConfig) -> Net {
    let v = &cfg.vocabulary;
    instantiate(DETECTOR, &cfg.prefix, &[("$FACE", quote(&v.face)), ("$ITEM", quote(&v.product))])
}

/// Fuses `up`'s output channel with `down`'s input channel. The fused place
/// keeps `up`'s name; the result's channels are `up`'s input and `down`'s
/// output.
pub fn compose(up: &Net, down: &Net) -> Result<Net, PatternError> {
    let (up_in, up_out) = up.channels.clone().ok_or_else(|| PatternError::MissingChannels(up.name.clone()))?;
    let (down_in, down_out) = down.channels.clone().ok_or_else(|| PatternError::MissingChannels(down.name.clone()))?;
    let (cu, cd) = (&up.places[&up_out].color, &down.places[&down_in].color);
    if cu != cd {
        return Err(PatternError::ChannelTypeMismatch { upstream: format_color(cu), downstream: format_color(cd) });
    }
    let rename = |p: &str| if p == down_in { up_out.clone() } else { p.to_string() };

    let mut net = up.clone();
    net.name = format!("{}+{}", up.name, down.name);
    for (name, place) in &down.places {
        if *name == down_in {
            continue;
        }
        if net.places.contains_key(name) || net.transitions.contains_key(name) {
            return Err(PatternError::NameClash(name.clone()));
        }
        net.places.insert(name.clone(), place.clone());
    }
    for (name, t) in &down.transitions {
        if net.places.contains_key(name) || net.transitions.contains_key(name) {
            return Err(PatternError::NameClash(name.clone()));
        }
        net.transitions.insert(name.clone(), t.clone());
    }
    for f in &down.flows {
        let mut f = f.clone();
        f.place = rename(&f.place);
        net.flows.push(f);
    }
    for (name, a) in &down.actions {
        match net.actions.get(name) {
            Some(existing) if existing != a => return Err(PatternError::ActionClash(name.clone())),
            Some(_) => {}
            None => {
                net.actions.insert(name.clone(), a.clone());
            }
        }
    }
    for (p, iri) in &down.prefixes {
        if !net.prefixes.iter().any(|(q, _)| q == p) {
            net.prefixes.push((p.clone(), iri.clone()));
        }
    }
    for (place, vals, n) in &down.init.tokens {
        net.init.tokens.push((rename(place), vals.clone(), *n));
    }
    for (var, vals) in &down.init.supply {
        match net.init.supply.get(var) {
            Some(existing) if existing != vals => return Err(PatternError::SupplyClash(var.clone())),
            _ => {
                net.init.supply.insert(var.clone(), vals.clone());
            }
        }
    }
    net.init.triples_file = net.init.triples_file.take().or_else(|| down.init.triples_file.clone());
    net.init.objects_file = net.init.objects_file.take().or_else(|| down.init.objects_file.clone());
    net.channels = Some((up_in, down_out));
    Ok(net)
}

/// Detector → Filter → Splitter, the default pipeline.
pub fn build_pipeline() -> Net {
    let det = build_feature_detector(&DetectorConfig { prefix: "det.".into(), ..Default::default() });
    let filter = build_message_filter(&FilterConfig { prefix: "filter.".into(), ..Default::default() }).expect("default tags");
    let split = build_splitter(&SplitterConfig { prefix: "split.".into(), ..Default::default() });
    let tail = compose(&filter, &split).expect("filter and splitter channels agree");
    compose(&det, &tail).expect("detector and filter channels agree")
}

pub const PATTERN_NAMES: &[&str] = &["splitter", "filter", "enricher", "detector", "pipeline"];

/// Net-definition text of a pattern under its default configuration.
pub fn emit(name: &str) -> Option<String> {
    let net = match name {
        "splitter" => build_splitter(&SplitterConfig::default()),
        "filter" => build_message_filter(&FilterConfig::default()).ok()?,
        "enricher" => build_content_enricher(&EnricherConfig::default()).ok()?,
        "detector" => build_feature_detector(&DetectorConfig::default()),
        "pipeline" => build_pipeline(),
        _ => return None,
    };
    Some(write_net(&net))
}
