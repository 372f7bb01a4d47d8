//! Versioned JSON document for [`Arsrg`].

use serde::{Deserialize, Serialize};

use super::{Arsrg, ImageInfo, LeafConfig};
use crate::error::{Error, Result};
use crate::features::Keypoint;
use crate::rag::RegionGraph;

const FORMAT: &str = "ARSRG";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    format: String,
    version: u32,
    image: ImageDoc,
    regions: RegionsDoc,
    leaves: Vec<Keypoint>,
    leaf_region: Vec<usize>,
    config: ConfigTag,
    tau: Option<f64>,
    leaf_edges: Option<Vec<(usize, usize)>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ImageDoc {
    id: String,
    w: usize,
    h: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionsDoc {
    n: usize,
    sizes: Vec<usize>,
    centroids: Vec<[f64; 2]>,
    adjacency: Vec<(usize, usize)>,
}

#[derive(Clone, Copy, Serialize, Deserialize)]
enum ConfigTag {
    #[serde(rename = "region")]
    Region,
    #[serde(rename = "region-graph")]
    RegionGraph,
}

pub fn serialize(a: &Arsrg) -> Vec<u8> {
    let rg = a.regions();
    let doc = Document {
        format: FORMAT.into(),
        version: VERSION,
        image: ImageDoc {
            id: a.image.id.clone(),
            w: a.image.width,
            h: a.image.height,
        },
        regions: RegionsDoc {
            n: rg.num_regions(),
            sizes: rg.region_sizes().to_vec(),
            centroids: rg.region_centroids().to_vec(),
            adjacency: rg.edges(),
        },
        leaves: a.leaves.clone(),
        leaf_region: a.leaf_region.clone(),
        config: match a.config {
            LeafConfig::RegionBased => ConfigTag::Region,
            LeafConfig::RegionGraphBased { .. } => ConfigTag::RegionGraph,
        },
        tau: a.config.tau(),
        leaf_edges: a.leaf_edges(),
    };
    let mut out = serde_json::to_vec_pretty(&doc).expect("graph document is always serializable");
    out.push(b'\n');
    out
}

pub fn deserialize(bytes: &[u8]) -> Result<Arsrg> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let doc: Document = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::field(if path == "." { "<root>".into() } else { path }, inner.to_string())
    })?;
    if doc.format != FORMAT {
        return Err(Error::field("format", format!("expected `{FORMAT}`, got `{}`", doc.format)));
    }
    if doc.version != VERSION {
        return Err(Error::field("version", format!("unsupported version {}", doc.version)));
    }
    if doc.regions.n != doc.regions.sizes.len() {
        return Err(Error::field(
            "regions.n",
            format!("{} regions declared, {} sizes given", doc.regions.n, doc.regions.sizes.len()),
        ));
    }
    let regions = RegionGraph::from_parts(doc.regions.sizes, doc.regions.centroids, &doc.regions.adjacency)
        .map_err(|e| Error::field("regions", e.to_string()))?;
    let config = match (doc.config, doc.tau) {
        (ConfigTag::Region, None) => LeafConfig::RegionBased,
        (ConfigTag::Region, Some(_)) => return Err(Error::field("tau", "must be null for config `region`")),
        (ConfigTag::RegionGraph, Some(tau)) => LeafConfig::RegionGraphBased { tau },
        (ConfigTag::RegionGraph, None) => {
            return Err(Error::field("tau", "required for config `region-graph`"))
        }
    };
    Arsrg::from_parts(
        ImageInfo {
            id: doc.image.id,
            width: doc.image.w,
            height: doc.image.h,
        },
        regions,
        doc.leaves,
        doc.leaf_region,
        config,
        doc.leaf_edges,
    )
}

#[cfg(test)]
mod tests {
    use super::super::tests::{kp, quadrant_map};
    use super::*;
    use crate::features::Descriptor;
    use crate::graph::build_arsrg;
    use crate::rag::build_rag;

    fn fixture(config: LeafConfig) -> Arsrg {
        let lm = quadrant_map(20);
        let mut kps: Vec<_> = [(2.5, 3.0), (4.0, 4.0), (15.0, 2.0), (3.0, 15.0), (12.25, 18.5), (14.0, 16.0)]
            .iter()
            .map(|&(x, y)| kp(x, y))
            .collect();
        for (i, k) in kps.iter_mut().enumerate() {
            let mut raw = [0.0f32; 128];
            raw[i] = 1.0;
            raw[100 + i] = 0.37;
            k.descriptor = Descriptor::normalized(raw);
            k.orientation = 0.3 * i as f64;
        }
        build_arsrg("fixture", &lm, &build_rag(&lm), kps, config).unwrap()
    }

    #[test]
    fn round_trip_both_configs() {
        for config in [LeafConfig::RegionBased, LeafConfig::RegionGraphBased { tau: 5.0 }] {
            let g = fixture(config);
            let back = deserialize(&serialize(&g)).unwrap();
            assert_eq!(back, g);
            assert_eq!(serialize(&back), serialize(&g));
        }
    }

    #[test]
    fn empty_leaves_round_trip() {
        let lm = quadrant_map(8);
        let g = build_arsrg("empty", &lm, &build_rag(&lm), vec![], LeafConfig::RegionGraphBased { tau: 2.0 })
            .unwrap();
        let back = deserialize(&serialize(&g)).unwrap();
        assert!(back.leaves().is_empty());
        assert_eq!(back, g);
    }

    #[test]
    fn document_fields() {
        let g = fixture(LeafConfig::RegionGraphBased { tau: 25.0 });
        let v: serde_json::Value = serde_json::from_slice(&serialize(&g)).unwrap();
        assert_eq!(v["format"], "ARSRG");
        assert_eq!(v["version"], 1);
        assert_eq!(v["config"], "region-graph");
        assert_eq!(v["tau"], 25.0);
        assert_eq!(v["image"]["w"], 20);
        assert_eq!(v["regions"]["adjacency"].as_array().unwrap().len(), 6);
        let r: serde_json::Value = serde_json::from_slice(&serialize(&fixture(LeafConfig::RegionBased))).unwrap();
        assert!(r["tau"].is_null() && r["leaf_edges"].is_null());
    }

    fn mutated(f: impl FnOnce(&mut serde_json::Map<String, serde_json::Value>)) -> Error {
        let g = fixture(LeafConfig::RegionGraphBased { tau: 5.0 });
        let mut v: serde_json::Value = serde_json::from_slice(&serialize(&g)).unwrap();
        f(v.as_object_mut().unwrap());
        deserialize(&serde_json::to_vec(&v).unwrap()).unwrap_err()
    }

    fn field_of(e: &Error) -> String {
        match e {
            Error::FormatField { field, message } => format!("{field}: {message}"),
            other => panic!("expected FormatField, got {other:?}"),
        }
    }

    #[test]
    fn missing_leaf_region_is_named() {
        let e = mutated(|m| {
            m.remove("leaf_region");
        });
        assert!(field_of(&e).contains("leaf_region"), "{e}");
    }

    #[test]
    fn malformed_documents_name_their_field() {
        let e = mutated(|m| {
            m.insert("version".into(), 2.into());
        });
        assert!(field_of(&e).starts_with("version"));
        let e = mutated(|m| {
            m["leaves"][1]["descriptor"] = serde_json::json!([0.5, 0.5]);
        });
        assert!(field_of(&e).starts_with("leaves[1].descriptor"), "{e}");
        let e = mutated(|m| {
            m["leaf_region"][0] = 9.into();
        });
        assert!(field_of(&e).starts_with("leaf_region[0]"), "{e}");
        let e = mutated(|m| {
            m["leaf_edges"] = serde_json::json!([[0, 2]]);
        });
        assert!(field_of(&e).starts_with("leaf_edges[0]"), "{e}");
        let e = mutated(|m| {
            m["config"] = "region".into();
        });
        assert!(field_of(&e).starts_with("tau"), "{e}");
        assert!(deserialize(b"not json").is_err());
    }
}
