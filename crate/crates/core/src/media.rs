//! Object storage: an address-keyed store of multimedia objects, plus a
//! synthetic media model in which images are labeled-region documents. Every
//! image operation used by the patterns is exact over this model.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{DataType, Rect, TypedSet, Value};

pub const SHAPES: &[&str] = &["oval", "rect"];
pub const COLORS: &[&str] = &["black", "blue", "green", "orange", "purple", "red", "white", "yellow"];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MediaError {
    #[error("no object stored at address {0}")]
    DanglingAddress(String),
    #[error("segment {seg} lies outside the {width}x{height} canvas")]
    OutOfBounds { seg: Rect, width: i64, height: i64 },
    #[error("unknown shape `{0}`")]
    UnknownShape(String),
    #[error("unknown color `{0}`")]
    UnknownColor(String),
    #[error("object {0} is not part of the storage")]
    UnknownObject(String),
}

/// Address of an object (`oid` text).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Address(pub String);

impl Address {
    pub fn new(s: impl Into<String>) -> Self {
        Address(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::types::format_oid(&self.0))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Region {
    pub tag: String,
    #[serde(rename = "box")]
    pub bbox: Rect,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Decoration {
    pub shape: String,
    pub color: String,
    #[serde(rename = "box")]
    pub bbox: Rect,
}

/// Stand-in for a JPG image: a canvas with tagged regions and drawn
/// decorations.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SyntheticImage {
    pub width: i64,
    pub height: i64,
    #[serde(default)]
    pub regions: Vec<Region>,
    #[serde(default)]
    pub decorations: Vec<Decoration>,
    /// Origin of the segment this image was extracted from, in the source
    /// image's coordinates.
    #[serde(rename = "sourceOffset", default, skip_serializing_if = "Option::is_none")]
    pub source_offset: Option<(i64, i64)>,
}

/// Feature tags that regions may carry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureVocabulary(pub Vec<String>);

impl Default for FeatureVocabulary {
    fn default() -> Self {
        FeatureVocabulary(vec!["human face".into(), "product".into(), "landscape".into(), "text".into()])
    }
}

impl FeatureVocabulary {
    pub fn contains(&self, tag: &str) -> bool {
        self.0.iter().any(|t| t == tag)
    }
}

impl SyntheticImage {
    pub fn new(width: i64, height: i64) -> Self {
        SyntheticImage { width, height, ..Default::default() }
    }

    pub fn with_region(mut self, tag: &str, bbox: Rect) -> Self {
        self.regions.push(Region { tag: tag.into(), bbox });
        self
    }

    pub fn canvas(&self) -> Rect {
        Rect { x1: 0, y1: 0, x2: self.width, y2: self.height }
    }

    fn check_bounds(&self, seg: &Rect) -> Result<(), MediaError> {
        if self.canvas().contains(seg) {
            Ok(())
        } else {
            Err(MediaError::OutOfBounds { seg: *seg, width: self.width, height: self.height })
        }
    }

    /// Checks that all boxes lie on the canvas and all tags are known.
    pub fn check(&self, vocab: &FeatureVocabulary) -> Result<(), String> {
        let canvas = self.canvas();
        for r in &self.regions {
            if !canvas.contains(&r.bbox) {
                return Err(format!("region {} outside canvas", r.bbox));
            }
            if !vocab.contains(&r.tag) {
                return Err(format!("region tag `{}` not in vocabulary", r.tag));
            }
        }
        for d in &self.decorations {
            if !canvas.contains(&d.bbox) {
                return Err(format!("decoration {} outside canvas", d.bbox));
            }
        }
        Ok(())
    }
}

/// Number of regions tagged `feature`; 0 when none are present.
pub fn count_imgs(img: &SyntheticImage, feature: &str) -> i64 {
    img.regions.iter().filter(|r| r.tag == feature).count() as i64
}

/// Boxes of the regions tagged `feature`, in region order.
pub fn detect_img(img: &SyntheticImage, feature: &str) -> TypedSet {
    let boxes = img
        .regions
        .iter()
        .filter(|r| r.tag == feature)
        .map(|r| vec![Value::Rect(r.bbox)]);
    TypedSet::from_items(vec![DataType::Rect], boxes).expect("rect elements are well typed")
}

/// Sub-image cut out by `seg`: keeps the regions and decorations lying fully
/// inside `seg`, translated to the new origin, and records `seg`'s origin.
pub fn extract_img(img: &SyntheticImage, seg: &Rect) -> Result<SyntheticImage, MediaError> {
    img.check_bounds(seg)?;
    let (dx, dy) = (-seg.x1, -seg.y1);
    Ok(SyntheticImage {
        width: seg.width(),
        height: seg.height(),
        regions: img
            .regions
            .iter()
            .filter(|r| seg.contains(&r.bbox))
            .map(|r| Region { tag: r.tag.clone(), bbox: r.bbox.translate(dx, dy) })
            .collect(),
        decorations: img
            .decorations
            .iter()
            .filter(|d| seg.contains(&d.bbox))
            .map(|d| Decoration { bbox: d.bbox.translate(dx, dy), ..d.clone() })
            .collect(),
        source_offset: Some((seg.x1, seg.y1)),
    })
}

/// Removes `part` from `img`. Regions of `part`, mapped back through its
/// extraction offset, are deleted from `img`; when `part` carries an offset,
/// decorations inside its footprint go too. The canvas is unchanged.
pub fn sub(img: &SyntheticImage, part: &SyntheticImage) -> SyntheticImage {
    let (ox, oy) = part.source_offset.unwrap_or((0, 0));
    let removed: Vec<Region> = part
        .regions
        .iter()
        .map(|r| Region { tag: r.tag.clone(), bbox: r.bbox.translate(ox, oy) })
        .collect();
    let mut out = img.clone();
    out.regions.retain(|r| !removed.contains(r));
    if part.source_offset.is_some() {
        let footprint = part.canvas().translate(ox, oy);
        out.decorations.retain(|d| !footprint.contains(&d.bbox));
    }
    out
}

/// Draws `shape` in `color` around `seg`. Regions are untouched.
pub fn mark_img(img: &SyntheticImage, seg: &Rect, shape: &str, color: &str) -> Result<SyntheticImage, MediaError> {
    img.check_bounds(seg)?;
    if !SHAPES.contains(&shape) {
        return Err(MediaError::UnknownShape(shape.into()));
    }
    if !COLORS.contains(&color) {
        return Err(MediaError::UnknownColor(color.into()));
    }
    let mut out = img.clone();
    out.decorations.push(Decoration { shape: shape.into(), color: color.into(), bbox: *seg });
    Ok(out)
}

/// The object storage. Snapshots are values; writes return new stores.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjectStore {
    objects: BTreeMap<Address, Arc<SyntheticImage>>,
}

impl ObjectStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn contains(&self, a: &Address) -> bool {
        self.objects.contains_key(a)
    }

    /// The object stored at `a`.
    pub fn src(&self, a: &Address) -> Result<Arc<SyntheticImage>, MediaError> {
        self.objects.get(a).cloned().ok_or_else(|| MediaError::DanglingAddress(a.0.clone()))
    }

    /// Address of a stored object (first match in address order).
    pub fn addr(&self, obj: &SyntheticImage) -> Result<Address, MediaError> {
        self.objects
            .iter()
            .find(|(_, o)| o.as_ref() == obj)
            .map(|(a, _)| a.clone())
            .ok_or_else(|| MediaError::UnknownObject(format!("{}x{}", obj.width, obj.height)))
    }

    /// Adds the pair, or replaces the object already stored at `a`.
    pub fn put_or_update(&self, a: Address, obj: impl Into<Arc<SyntheticImage>>) -> ObjectStore {
        let mut next = self.clone();
        next.objects.insert(a, obj.into());
        next
    }

    /// Removes `a`; absent addresses are a no-op.
    pub fn remove(&self, a: &Address) -> ObjectStore {
        let mut next = self.clone();
        next.objects.remove(a);
        next
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Address, &Arc<SyntheticImage>)> {
        self.objects.iter()
    }

    pub fn addresses(&self) -> impl Iterator<Item = &Address> {
        self.objects.keys()
    }

    pub fn from_json(text: &str) -> Result<ObjectStore, serde_json::Error> {
        let raw: BTreeMap<Address, SyntheticImage> = serde_json::from_str(text)?;
        Ok(ObjectStore { objects: raw.into_iter().map(|(a, o)| (a, Arc::new(o))).collect() })
    }

    pub fn to_json(&self) -> String {
        let raw: BTreeMap<&Address, &SyntheticImage> = self.objects.iter().map(|(a, o)| (a, o.as_ref())).collect();
        serde_json::to_string_pretty(&raw).expect("object store serializes")
    }
}

impl FromIterator<(Address, SyntheticImage)> for ObjectStore {
    fn from_iter<I: IntoIterator<Item = (Address, SyntheticImage)>>(iter: I) -> Self {
        ObjectStore { objects: iter.into_iter().map(|(a, o)| (a, Arc::new(o))).collect() }
    }
}

impl FromIterator<(Address, Arc<SyntheticImage>)> for ObjectStore {
    fn from_iter<I: IntoIterator<Item = (Address, Arc<SyntheticImage>)>>(iter: I) -> Self {
        ObjectStore { objects: iter.into_iter().collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rect(x1: i64, y1: i64, x2: i64, y2: i64) -> Rect {
        Rect::new(x1, y1, x2, y2).unwrap()
    }

    fn sample() -> SyntheticImage {
        SyntheticImage::new(100, 100)
            .with_region("human face", rect(10, 10, 20, 20))
            .with_region("human face", rect(30, 30, 45, 45))
            .with_region("product", rect(60, 60, 90, 90))
    }

    #[test]
    fn src_lookup_and_dangling() {
        let store = ObjectStore::new().put_or_update(Address::new("a1"), sample());
        assert_eq!(*store.src(&Address::new("a1")).unwrap(), sample());
        assert_eq!(ObjectStore::new().src(&Address::new("a1")), Err(MediaError::DanglingAddress("a1".into())));
        let store2 = store.put_or_update(Address::new("a2"), SyntheticImage::new(1, 1));
        assert_eq!(*store2.src(&Address::new("a2")).unwrap(), SyntheticImage::new(1, 1));
    }

    #[test]
    fn put_adds_then_updates() {
        let s1 = ObjectStore::new().put_or_update(Address::new("a"), sample());
        assert_eq!(s1.len(), 1);
        let s2 = s1.put_or_update(Address::new("a"), SyntheticImage::new(5, 5));
        assert_eq!(s2.len(), 1);
        assert_eq!(s2.src(&Address::new("a")).unwrap().width, 5);
    }

    #[test]
    fn remove_existing_and_absent() {
        let s = ObjectStore::new().put_or_update(Address::new("a"), sample());
        let removed = s.remove(&Address::new("a"));
        assert_eq!(removed.len(), 0);
        assert!(matches!(removed.src(&Address::new("a")), Err(MediaError::DanglingAddress(_))));
        assert_eq!(s.remove(&Address::new("zzz")), s);
    }

    #[test]
    fn addr_inverts_src() {
        let s = ObjectStore::new()
            .put_or_update(Address::new("a"), sample())
            .put_or_update(Address::new("b"), SyntheticImage::new(3, 3));
        for (a, o) in s.iter() {
            assert_eq!(&s.addr(o).unwrap(), a);
        }
    }

    #[test]
    fn count_and_detect() {
        let img = sample();
        assert_eq!(count_imgs(&img, "human face"), 2);
        assert_eq!(count_imgs(&img, "product"), 1);
        assert_eq!(count_imgs(&SyntheticImage::new(10, 10), "human face"), 0);
        let faces = detect_img(&img, "human face");
        assert_eq!(faces.items(), &[vec![Value::Rect(rect(10, 10, 20, 20))], vec![Value::Rect(rect(30, 30, 45, 45))]]);
        assert_eq!(detect_img(&img, "product").items(), &[vec![Value::Rect(rect(60, 60, 90, 90))]]);
        assert!(detect_img(&SyntheticImage::new(4, 4), "product").is_empty());
    }

    #[test]
    fn extract_translates_contained_regions() {
        let img = SyntheticImage::new(100, 100).with_region("human face", rect(10, 10, 20, 20));
        let part = extract_img(&img, &rect(0, 0, 50, 50)).unwrap();
        assert_eq!((part.width, part.height), (50, 50));
        assert_eq!(part.regions, vec![Region { tag: "human face".into(), bbox: rect(10, 10, 20, 20) }]);

        let shifted = extract_img(&img, &rect(5, 5, 50, 50)).unwrap();
        assert_eq!(shifted.regions[0].bbox, rect(5, 5, 15, 15));

        assert!(extract_img(&img, &rect(60, 60, 100, 100)).unwrap().regions.is_empty());
        assert!(matches!(extract_img(&img, &rect(0, 0, 101, 5)), Err(MediaError::OutOfBounds { .. })));
    }

    #[test]
    fn extract_full_canvas_keeps_content() {
        let img = sample();
        let whole = extract_img(&img, &img.canvas()).unwrap();
        assert_eq!(whole.regions, img.regions);
        assert_eq!((whole.width, whole.height), (img.width, img.height));
    }

    #[test]
    fn sub_removes_extracted_regions() {
        let img = sample();
        let seg = rect(5, 5, 25, 25);
        let cut = sub(&img, &extract_img(&img, &seg).unwrap());
        assert!(cut.regions.iter().all(|r| !seg.contains(&r.bbox)));
        assert_eq!(count_imgs(&cut, "human face"), 1);
        assert_eq!((cut.width, cut.height), (100, 100));
    }

    #[test]
    fn sub_neutral_and_idempotent() {
        let img = sample();
        assert_eq!(sub(&img, &SyntheticImage::default()), img);
        let part = extract_img(&img, &rect(0, 0, 50, 50)).unwrap();
        let once = sub(&img, &part);
        assert_eq!(sub(&once, &part), once);
    }

    #[test]
    fn sub_drops_decorations_in_footprint() {
        let img = mark_img(&sample(), &rect(10, 10, 20, 20), "oval", "red").unwrap();
        let cut = sub(&img, &extract_img(&img, &rect(0, 0, 25, 25)).unwrap());
        assert!(cut.decorations.is_empty());
    }

    #[test]
    fn mark_appends_decorations() {
        let img = sample();
        let once = mark_img(&img, &rect(1, 1, 5, 5), "oval", "red").unwrap();
        assert_eq!(once.decorations.len(), 1);
        assert_eq!(once.regions, img.regions);
        let twice = mark_img(&once, &rect(2, 2, 3, 3), "rect", "blue").unwrap();
        assert_eq!(twice.decorations[0].shape, "oval");
        assert_eq!(twice.decorations[1].shape, "rect");
        assert_eq!(mark_img(&img, &rect(1, 1, 5, 5), "star", "red"), Err(MediaError::UnknownShape("star".into())));
        assert!(matches!(mark_img(&img, &rect(1, 1, 500, 5), "oval", "red"), Err(MediaError::OutOfBounds { .. })));
    }

    #[test]
    fn json_field_names() {
        let store = ObjectStore::new().put_or_update(
            Address::new("img1"),
            extract_img(&mark_img(&sample(), &rect(1, 1, 2, 2), "oval", "red").unwrap(), &rect(0, 0, 50, 50)).unwrap(),
        );
        let text = store.to_json();
        for field in ["\"width\"", "\"height\"", "\"regions\"", "\"tag\"", "\"box\"", "\"decorations\"", "\"shape\"", "\"color\"", "\"sourceOffset\""] {
            assert!(text.contains(field), "missing {field} in {text}");
        }
        assert_eq!(ObjectStore::from_json(&text).unwrap(), store);
    }

    #[test]
    fn vocabulary_check() {
        assert!(sample().check(&FeatureVocabulary::default()).is_ok());
        let bad = SyntheticImage::new(10, 10).with_region("unicorn", rect(0, 0, 1, 1));
        assert!(bad.check(&FeatureVocabulary::default()).is_err());
    }

    fn arb_image() -> impl Strategy<Value = SyntheticImage> {
        let region = (0usize..3, 0i64..40, 0i64..40, 1i64..20, 1i64..20).prop_map(|(t, x, y, w, h)| Region {
            tag: ["human face", "product", "text"][t].to_string(),
            bbox: Rect::new(x, y, x + w, y + h).unwrap(),
        });
        prop::collection::vec(region, 0..8).prop_map(|regions| SyntheticImage { width: 60, height: 60, regions, ..Default::default() })
    }

    proptest! {
        #[test]
        fn count_matches_region_tags(img in arb_image()) {
            for f in ["human face", "product", "text", "other"] {
                prop_assert_eq!(count_imgs(&img, f) as usize, img.regions.iter().filter(|r| r.tag == f).count());
            }
        }

        #[test]
        fn extract_then_sub_removes_inside(img in arb_image(), x in 0i64..30, y in 0i64..30, w in 0i64..30, h in 0i64..30) {
            let seg = Rect::new(x, y, x + w, y + h).unwrap();
            let cut = sub(&img, &extract_img(&img, &seg).unwrap());
            for f in ["human face", "product", "text"] {
                let inside = img.regions.iter().filter(|r| r.tag == f && seg.contains(&r.bbox)).count() as i64;
                prop_assert_eq!(count_imgs(&cut, f), count_imgs(&img, f) - inside);
            }
        }

        #[test]
        fn put_touches_only_its_address(img in arb_image(), n in 1usize..5, target in 0usize..6) {
            let store: ObjectStore = (0..n).map(|i| (Address::new(format!("a{i}")), SyntheticImage::new(i as i64, 1))).collect();
            let a = Address::new(format!("a{target}"));
            let next = store.put_or_update(a.clone(), img.clone());
            prop_assert_eq!(&*next.src(&a).unwrap(), &img);
            for (addr, obj) in store.iter() {
                if addr != &a {
                    prop_assert_eq!(next.src(addr).unwrap(), obj.clone());
                }
            }
        }
    }
}
