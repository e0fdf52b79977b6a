//! Deterministic schemas, graphs and queries used by tests, benches and the
//! `gen` command.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{
    DataType, GraphBuilder, GraphSchema, PropValue, Properties, PropertyGraph, VTypeId, VertexId,
};
use crate::ir::{EdgeConstraint, EdgeDir, Params, Pattern, Value, VertexConstraint};

fn props(items: &[(&str, PropValue)]) -> Properties {
    items
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

fn ok<T>(r: crate::error::Result<T>) -> T {
    r.expect("fixture construction is schema-consistent")
}

/// Person / Product / Place schema of the running example.
pub fn fig1_schema() -> GraphSchema {
    ok(GraphSchema::builder()
        .vertex(
            "Person",
            &[("name", DataType::String), ("age", DataType::Integer)],
        )
        .vertex("Product", &[("name", DataType::String)])
        .vertex("Place", &[("name", DataType::String)])
        .edge("Person", "Knows", "Person", &[])
        .edge("Person", "Purchases", "Product", &[])
        .edge("Person", "LocatedIn", "Place", &[])
        .edge("Product", "ProducedIn", "Place", &[])
        .build())
}

pub const FIG1_QUERY: &str = "MATCH (v1)-[]->(v2), (v1)-[]->(v3:Place), (v2)-[]->(v3)\n\
WHERE v3.name = \"China\"\n\
RETURN v2.name, count(v2)\n\
ORDER BY count(v2) DESC\n\
LIMIT 10";

/// Triangle typed Product, Place, Place; no schema typing admits it.
pub const FIG1D_QUERY: &str =
    "MATCH (v1:Product)-[]->(v2:Place), (v1)-[]->(v3:Place), (v2)-[]->(v3) RETURN count(v1)";

pub const PLACE_NAMES: [&str; 5] = ["China", "France", "Brazil", "Kenya", "Japan"];

/// Graph over [`fig1_schema`] with 10 persons, 20 products, 5 places,
/// 30 Knows, 40 Purchases, 10 LocatedIn and 20 ProducedIn edges.
pub fn fig5_graph(seed: u64) -> PropertyGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = GraphBuilder::new(fig1_schema());
    let mut next = 0i64;
    let mut add = |b: &mut GraphBuilder, t: &str, p: Properties| {
        next += 1;
        ok(b.add_vertex_named(next, t, p))
    };
    let persons: Vec<VertexId> = (0..10)
        .map(|i| {
            let p = props(&[
                ("name", PropValue::Str(format!("person{i}"))),
                ("age", PropValue::Int(rng.gen_range(18..70))),
            ]);
            add(&mut b, "Person", p)
        })
        .collect();
    let products: Vec<VertexId> = (0..20)
        .map(|i| {
            add(
                &mut b,
                "Product",
                props(&[("name", PropValue::Str(format!("product{i}")))]),
            )
        })
        .collect();
    let places: Vec<VertexId> = PLACE_NAMES
        .iter()
        .map(|n| {
            add(
                &mut b,
                "Place",
                props(&[("name", PropValue::Str(n.to_string()))]),
            )
        })
        .collect();

    let mut pairs: Vec<(usize, usize)> = (0..10)
        .flat_map(|a| (0..10).filter(move |&c| c != a).map(move |c| (a, c)))
        .collect();
    pairs.shuffle(&mut rng);
    for &(a, c) in &pairs[..30] {
        ok(b.add_edge_labeled(persons[a], persons[c], "Knows", Properties::new()));
    }
    let mut buys: Vec<(usize, usize)> =
        (0..10).flat_map(|a| (0..20).map(move |c| (a, c))).collect();
    buys.shuffle(&mut rng);
    for &(a, c) in &buys[..40] {
        ok(b.add_edge_labeled(persons[a], products[c], "Purchases", Properties::new()));
    }
    for (i, &p) in persons.iter().enumerate() {
        let place = if i < 2 { 0 } else { rng.gen_range(0..5) };
        ok(b.add_edge_labeled(p, places[place], "LocatedIn", Properties::new()));
    }
    for (i, &p) in products.iter().enumerate() {
        let place = if i < 4 { 0 } else { rng.gen_range(0..5) };
        ok(b.add_edge_labeled(p, places[place], "ProducedIn", Properties::new()));
    }
    b.build()
}

const LDBC_VERTICES: [&str; 11] = [
    "PERSON",
    "FORUM",
    "POST",
    "COMMENT",
    "TAG",
    "TAGCLASS",
    "CITY",
    "COUNTRY",
    "CONTINENT",
    "UNIVERSITY",
    "COMPANY",
];

const LDBC_EDGES: [(&str, &str, &str); 25] = [
    ("PERSON", "KNOWS", "PERSON"),
    ("PERSON", "HASINTEREST", "TAG"),
    ("PERSON", "LIKES", "POST"),
    ("PERSON", "LIKES", "COMMENT"),
    ("PERSON", "STUDYAT", "UNIVERSITY"),
    ("PERSON", "WORKAT", "COMPANY"),
    ("FORUM", "HASMODERATOR", "PERSON"),
    ("FORUM", "HASMEMBER", "PERSON"),
    ("FORUM", "CONTAINEROF", "POST"),
    ("FORUM", "HASTAG", "TAG"),
    ("POST", "HASTAG", "TAG"),
    ("COMMENT", "HASTAG", "TAG"),
    ("POST", "HASCREATOR", "PERSON"),
    ("COMMENT", "HASCREATOR", "PERSON"),
    ("PERSON", "ISLOCATEDIN", "CITY"),
    ("POST", "ISLOCATEDIN", "COUNTRY"),
    ("COMMENT", "ISLOCATEDIN", "COUNTRY"),
    ("UNIVERSITY", "ISLOCATEDIN", "CITY"),
    ("COMPANY", "ISLOCATEDIN", "COUNTRY"),
    ("COMMENT", "REPLYOF", "POST"),
    ("COMMENT", "REPLYOF", "COMMENT"),
    ("TAG", "HASTYPE", "TAGCLASS"),
    ("TAGCLASS", "ISSUBCLASSOF", "TAGCLASS"),
    ("CITY", "ISPARTOF", "COUNTRY"),
    ("COUNTRY", "ISPARTOF", "CONTINENT"),
];

/// Miniature social-network schema with MESSAGE, PLACE and ORGANISATION
/// supertypes.
pub fn ldbc_schema() -> GraphSchema {
    let mut s = GraphSchema::builder();
    for t in LDBC_VERTICES {
        let mut p: Vec<(&str, DataType)> = vec![("id", DataType::Integer)];
        match t {
            "POST" | "COMMENT" => p.push(("length", DataType::Integer)),
            "FORUM" => p.push(("title", DataType::String)),
            _ => p.push(("name", DataType::String)),
        }
        s = s.vertex(t, &p);
    }
    for (a, l, c) in LDBC_EDGES {
        s = s.edge(a, l, c, &[]);
    }
    ok(s.supertype("MESSAGE", &["POST", "COMMENT"])
        .supertype("PLACE", &["CITY", "COUNTRY", "CONTINENT"])
        .supertype("ORGANISATION", &["UNIVERSITY", "COMPANY"])
        .build())
}

/// Index biased toward small values, giving heavy-tailed degrees.
fn skewed(rng: &mut ChaCha8Rng, n: usize) -> usize {
    let u: f64 = rng.gen();
    ((u * u * n as f64) as usize).min(n - 1)
}

/// Vertex counts per 1.0 of scale, in [`LDBC_VERTICES`] order.
const LDBC_SIZES: [usize; 11] = [300, 100, 800, 1200, 150, 20, 60, 15, 5, 40, 60];

/// Synthetic graph over [`ldbc_schema`]; scale 1.0 gives about 2,750
/// vertices and 13,000 edges. Vertex `id` equals the external id.
pub fn ldbc_graph(seed: u64, scale: f64) -> PropertyGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = GraphBuilder::new(ldbc_schema());
    let mut ids: Vec<Vec<VertexId>> = Vec::new();
    let mut next = 0i64;
    for (t, &base) in LDBC_VERTICES.iter().zip(&LDBC_SIZES) {
        let n = ((base as f64 * scale).round() as usize).max(1);
        let mut vs = Vec::with_capacity(n);
        for i in 0..n {
            let mut p = props(&[("id", PropValue::Int(next))]);
            match *t {
                "POST" | "COMMENT" => {
                    p.insert("length".into(), PropValue::Int(rng.gen_range(0..200)));
                }
                "FORUM" => {
                    p.insert("title".into(), PropValue::Str(format!("forum{i}")));
                }
                _ => {
                    p.insert(
                        "name".into(),
                        PropValue::Str(format!("{}{i}", t.to_lowercase())),
                    );
                }
            }
            vs.push(ok(b.add_vertex_named(next, t, p)));
            next += 1;
        }
        ids.push(vs);
    }
    let of = |t: &str| LDBC_VERTICES.iter().position(|x| *x == t).unwrap();
    let (person, forum, post, comment) = (of("PERSON"), of("FORUM"), of("POST"), of("COMMENT"));
    let (tag, tagclass, city, country) = (of("TAG"), of("TAGCLASS"), of("CITY"), of("COUNTRY"));
    let (continent, university, company) = (of("CONTINENT"), of("UNIVERSITY"), of("COMPANY"));
    let n = |t: usize| ids[t].len();
    let edge = |b: &mut GraphBuilder, s: VertexId, d: VertexId, l: &str| {
        ok(b.add_edge_labeled(s, d, l, Properties::new()));
    };

    // Community structure: forums own posts and members; members know
    // each other and like posts of their forums more often than chance.
    let container: Vec<usize> = (0..n(post)).map(|_| skewed(&mut rng, n(forum))).collect();
    let mut forum_posts: Vec<Vec<usize>> = vec![Vec::new(); n(forum)];
    for (m, &f) in container.iter().enumerate() {
        forum_posts[f].push(m);
    }
    let moderators: Vec<usize> = (0..n(forum)).map(|_| skewed(&mut rng, n(person))).collect();
    let members: Vec<BTreeSet<usize>> = (0..n(forum))
        .map(|_| distinct(&mut rng, n(person), 8, false))
        .collect();
    let forum_tags: Vec<BTreeSet<usize>> = (0..n(forum))
        .map(|_| distinct(&mut rng, n(tag), 2, true))
        .collect();

    let mut knows = BTreeSet::new();
    let target = 4 * n(person);
    let mut tries = 0;
    while knows.len() < target && tries < target * 20 {
        tries += 1;
        let (a, c) = (skewed(&mut rng, n(person)), rng.gen_range(0..n(person)));
        if a != c {
            knows.insert((a, c));
        }
    }
    for group in &members {
        for &a in group {
            for &c in group {
                if a != c && rng.gen_bool(0.1) {
                    knows.insert((a, c));
                }
            }
        }
    }
    for (a, c) in knows {
        edge(&mut b, ids[person][a], ids[person][c], "KNOWS");
    }
    let mut likes: Vec<BTreeSet<usize>> = (0..n(person))
        .map(|_| distinct(&mut rng, n(post), 3, true))
        .collect();
    let mut interests: Vec<BTreeSet<usize>> = (0..n(person))
        .map(|_| distinct(&mut rng, n(tag), 2, true))
        .collect();
    for f in 0..n(forum) {
        let posts = &forum_posts[f];
        if posts.is_empty() {
            continue;
        }
        for &m in members[f].iter().chain([&moderators[f]]) {
            if rng.gen_bool(0.5) {
                likes[m].insert(posts[rng.gen_range(0..posts.len())]);
            }
        }
        if rng.gen_bool(0.5) {
            let tags: Vec<usize> = forum_tags[f].iter().copied().collect();
            interests[moderators[f]].insert(tags[rng.gen_range(0..tags.len())]);
        }
    }
    for i in 0..n(person) {
        let p = ids[person][i];
        for &t in &interests[i] {
            edge(&mut b, p, ids[tag][t], "HASINTEREST");
        }
        edge(
            &mut b,
            p,
            ids[city][rng.gen_range(0..n(city))],
            "ISLOCATEDIN",
        );
        if rng.gen_bool(0.66) {
            edge(
                &mut b,
                p,
                ids[university][rng.gen_range(0..n(university))],
                "STUDYAT",
            );
        }
        edge(
            &mut b,
            p,
            ids[company][rng.gen_range(0..n(company))],
            "WORKAT",
        );
        for &m in &likes[i] {
            edge(&mut b, p, ids[post][m], "LIKES");
        }
        for m in distinct(&mut rng, n(comment), 2, true) {
            edge(&mut b, p, ids[comment][m], "LIKES");
        }
    }
    for i in 0..n(forum) {
        let f = ids[forum][i];
        edge(&mut b, f, ids[person][moderators[i]], "HASMODERATOR");
        for &m in &members[i] {
            edge(&mut b, f, ids[person][m], "HASMEMBER");
        }
        for &t in &forum_tags[i] {
            edge(&mut b, f, ids[tag][t], "HASTAG");
        }
    }
    for i in 0..n(post) {
        let m = ids[post][i];
        edge(&mut b, ids[forum][container[i]], m, "CONTAINEROF");
        edge(
            &mut b,
            m,
            ids[person][skewed(&mut rng, n(person))],
            "HASCREATOR",
        );
        edge(
            &mut b,
            m,
            ids[country][rng.gen_range(0..n(country))],
            "ISLOCATEDIN",
        );
        let tags: Vec<usize> = forum_tags[container[i]].iter().copied().collect();
        let t = if rng.gen_bool(0.5) {
            tags[rng.gen_range(0..tags.len())]
        } else {
            skewed(&mut rng, n(tag))
        };
        edge(&mut b, m, ids[tag][t], "HASTAG");
    }
    for i in 0..n(comment) {
        let m = ids[comment][i];
        edge(
            &mut b,
            m,
            ids[person][skewed(&mut rng, n(person))],
            "HASCREATOR",
        );
        edge(
            &mut b,
            m,
            ids[country][rng.gen_range(0..n(country))],
            "ISLOCATEDIN",
        );
        if rng.gen_bool(0.5) {
            edge(&mut b, m, ids[tag][skewed(&mut rng, n(tag))], "HASTAG");
        }
        if i > 0 && rng.gen_bool(0.4) {
            edge(&mut b, m, ids[comment][rng.gen_range(0..i)], "REPLYOF");
        } else {
            edge(&mut b, m, ids[post][skewed(&mut rng, n(post))], "REPLYOF");
        }
    }
    for i in 0..n(tag) {
        edge(
            &mut b,
            ids[tag][i],
            ids[tagclass][skewed(&mut rng, n(tagclass))],
            "HASTYPE",
        );
    }
    for i in 1..n(tagclass) {
        edge(
            &mut b,
            ids[tagclass][i],
            ids[tagclass][rng.gen_range(0..i)],
            "ISSUBCLASSOF",
        );
    }
    for i in 0..n(city) {
        edge(
            &mut b,
            ids[city][i],
            ids[country][i % n(country)],
            "ISPARTOF",
        );
    }
    for i in 0..n(country) {
        edge(
            &mut b,
            ids[country][i],
            ids[continent][i % n(continent)],
            "ISPARTOF",
        );
    }
    for i in 0..n(university) {
        edge(
            &mut b,
            ids[university][i],
            ids[city][rng.gen_range(0..n(city))],
            "ISLOCATEDIN",
        );
    }
    for i in 0..n(company) {
        edge(
            &mut b,
            ids[company][i],
            ids[country][rng.gen_range(0..n(country))],
            "ISLOCATEDIN",
        );
    }
    b.build()
}

/// Up to `k` distinct indices below `n`, optionally skewed.
fn distinct(rng: &mut ChaCha8Rng, n: usize, k: usize, skew: bool) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for _ in 0..k * 4 {
        if out.len() >= k.min(n) {
            break;
        }
        out.insert(if skew {
            skewed(rng, n)
        } else {
            rng.gen_range(0..n)
        });
    }
    out
}

/// Benchmark queries over [`ldbc_schema`], as `(name, text)`.
pub const LDBC_QUERIES: [(&str, &str); 19] = [
    (
        "Qt1",
        "Match (p)<-[:HASCREATOR]-()<-[:CONTAINEROF]-()\nReturn count(p)",
    ),
    (
        "Qt2",
        "Match (p)-[]->(:ORGANISATION)-[]->(:PLACE)\nReturn count(p);",
    ),
    (
        "Qt3",
        "Match (p)<-[:ISLOCATEDIN]-()-[]->(:TAG)\nReturn count(p);",
    ),
    (
        "Qt4",
        "Match (p1)<-[]-(p2:POST),\n(p1)<-[:HASMODERATOR]-()-[]->(p2)\nReturn count(p1);",
    ),
    (
        "Qt5",
        "Match (p1:POST)-[]->(p2), (p2)-[]->(:PLACE)\nReturn count(p2);",
    ),
    (
        "Qr1",
        "Match (message:COMMENT|POST)-[:HASCREATOR]->(person:PERSON),\n\
(message:COMMENT|POST)-[:HASTAG]->(tag:TAG),\n\
(person:PERSON)-[:HASINTEREST]->(tag:TAG)\n\
Return count(person);",
    ),
    (
        "Qr2",
        "Match (p:COMMENT)-[]->(p2:PERSON)-[]->(c:CITY),\n\
(p)<-[]-(message),\n\
(message)-[]->(tag:TAG)\n\
Return count(c);",
    ),
    (
        "Qr3",
        "Match (author:PERSON)<-[:HASCREATOR]-(msg1:POST|COMMENT)\nReturn count(author);",
    ),
    (
        "Qr4",
        "Match (author:PERSON)<-[:HASCREATOR]-(msg1:POST|COMMENT)\n\
Where msg1.length > $len\n\
Return count(author);",
    ),
    (
        "Qr5",
        "Match (p1:PERSON)-[:KNOWS]->(p2:PERSON)\n\
Where p1.id = $id1 and p2.id = $id2\n\
Return count(p1);",
    ),
    (
        "Qr6",
        "Match (p1:PERSON)-[:KNOWS]->(p2:PERSON)-[:LIKES]->(comment:COMMENT)\n\
Where p1.id = $id1 and p2.id = $id2 and comment.length > $len\n\
Return count(p1);",
    ),
    (
        "Qc1a",
        "Match (message:Message)-[:HASCREATOR]->(person:PERSON),\n\
(message:Message)-[:HASTAG]->(tag:TAG),\n\
(person:PERSON)-[:HASINTEREST]->(tag:TAG)\n\
Return count(person);",
    ),
    (
        "Qc1b",
        "Match (message:PERSON|FORUM)-[:KNOWS|HASMODERATOR]->(person:PERSON),\n\
(message)-[]->(tag:TAG),\n\
(person)-[]->(tag)\n\
Return count(person);",
    ),
    (
        "Qc2a",
        "Match (person1:PERSON)-[:LIKES]->(message:MESSAGE),\n\
(message:MESSAGE)-[:HASCREATOR]->(person2:PERSON),\n\
(person1:PERSON)<-[:HASMODERATOR]-(place:FORUM),\n\
(person2:PERSON)<-[:HASMODERATOR]-(place:FORUM)\n\
Return count(person1);",
    ),
    (
        "Qc2b",
        "Match (person1:PERSON)-[:LIKES]->(message:POST),\n\
(message:POST)<-[:CONTAINEROF]-(person2:FORUM),\n\
(person1:PERSON)-[:KNOWS|HASINTEREST]->(place:PERSON|TAG),\n\
(person2:FORUM)-[:HASMODERATOR|HASTAG]->(place:PERSON|TAG)\n\
Return count(person1);",
    ),
    (
        "Qc3a",
        "Match (person1:PERSON)<-[:HASCREATOR]-(comment:COMMENT),\n\
(comment:COMMENT)-[:REPLYOF]->(post:POST),\n\
(post:POST)<-[:CONTAINEROF]-(forum:FORUM),\n\
(forum:FORUM)-[:HASMEMBER]->(person2:PERSON)\n\
Return count(person1);",
    ),
    (
        "Qc3b",
        "Match (p:COMMENT)-[]->(:PERSON)-[]->(:CITY),\n\
(p)<-[]-(message),\n\
(message)-[]->(tag:TAG)\n\
Return count(p);",
    ),
    (
        "Qc4a",
        "Match (forum:FORUM)-[:CONTAINEROF]->(post:POST),\n\
(forum:FORUM)-[:HASMEMBER]->(person1:PERSON),\n\
(forum:FORUM)-[:HASMEMBER]->(person2:PERSON),\n\
(person1:PERSON)-[:KNOWS]->(person2:PERSON),\n\
(person1:PERSON)-[:LIKES]->(post:POST),\n\
(person2:PERSON)-[:LIKES]->(post:POST)\n\
Return count(person1);",
    ),
    (
        "Qc4b",
        "Match (forum:FORUM)-[:HASTAG]->(post:TAG),\n\
(forum:FORUM)-[:HASMODERATOR]->(person1:PERSON),\n\
(forum:FORUM)-[:HASMODERATOR|CONTAINEROF]->(person2:PERSON|POST),\n\
(person1:PERSON)-[:KNOWS|LIKES]->(person2:PERSON|POST),\n\
(person1:PERSON)-[:HASINTEREST]->(post:TAG),\n\
(person2:PERSON|POST)-[:HASINTEREST|HASTAG]->(post:TAG)\n\
Return count(person1);",
    ),
];

pub fn ldbc_query(name: &str) -> Option<&'static str> {
    LDBC_QUERIES
        .iter()
        .find(|(n, _)| n.eq_ignore_ascii_case(name))
        .map(|(_, q)| *q)
}

/// Parameters for the LDBC queries: `len`, plus a KNOWS pair `id1 -> id2`
/// where `id2` likes at least one comment longer than `len`.
pub fn ldbc_params(g: &PropertyGraph) -> Params {
    let s = g.schema();
    let len = 100i64;
    let knows = s.resolve_edge_label("KNOWS").unwrap_or_default();
    let likes = s.resolve_edge_label("LIKES").unwrap_or_default();
    let comment = s.vertex_type_id("COMMENT");
    let long_like = |v: VertexId| {
        g.adjacency(v, true).iter().any(|a| {
            likes.contains(&a.etype)
                && Some(g.vertex(a.neighbor).vtype) == comment
                && matches!(g.vertex_property(a.neighbor, "length"), Some(PropValue::Int(l)) if *l > len)
        })
    };
    let id = |v: VertexId| match g.vertex_property(v, "id") {
        Some(PropValue::Int(i)) => *i,
        _ => g.vertex(v).external_id,
    };
    let pair = g
        .edges()
        .filter(|(_, e)| knows.contains(&e.etype))
        .find(|(_, e)| long_like(e.dst))
        .or_else(|| g.edges().find(|(_, e)| knows.contains(&e.etype)))
        .map(|(_, e)| (id(e.src), id(e.dst)))
        .unwrap_or((0, 1));
    Params::from([
        ("len".to_string(), Value::Int(len)),
        ("id1".to_string(), Value::Int(pair.0)),
        ("id2".to_string(), Value::Int(pair.1)),
    ])
}

/// Random schema with 1..=5 vertex types and 1..=8 triplets whose labels
/// are drawn from a small pool, so labels repeat across triplets.
pub fn random_schema(rng: &mut impl Rng) -> GraphSchema {
    let nv = rng.gen_range(1..=5);
    let nt = rng.gen_range(1..=8);
    let names: Vec<String> = (0..nv).map(|i| format!("T{i}")).collect();
    let mut s = GraphSchema::builder();
    for n in &names {
        s = s.vertex(n, &[("id", DataType::Integer), ("w", DataType::Integer)]);
    }
    let mut seen = BTreeSet::new();
    for _ in 0..nt * 4 {
        if seen.len() == nt {
            break;
        }
        let t = (
            rng.gen_range(0..nv),
            rng.gen_range(0..3),
            rng.gen_range(0..nv),
        );
        if seen.insert(t) {
            s = s.edge(
                &names[t.0],
                &format!("E{}", t.1),
                &names[t.2],
                &[("w", DataType::Integer)],
            );
        }
    }
    ok(s.build())
}

/// Random graph with `n` vertices and up to `m` edges. Vertex `id` equals
/// the external id; `w` properties are small integers.
pub fn random_graph(
    schema: impl Into<std::sync::Arc<GraphSchema>>,
    n: usize,
    m: usize,
    rng: &mut impl Rng,
) -> PropertyGraph {
    let mut b = GraphBuilder::new(schema);
    let nv = b.schema().vertex_type_count();
    let has = |b: &GraphBuilder, t: VTypeId, p: &str| b.schema().vertex_property(t, p).is_some();
    let mut by_type: Vec<Vec<VertexId>> = vec![Vec::new(); nv];
    for i in 0..n {
        let t = VTypeId(rng.gen_range(0..nv) as u32);
        let mut p = Properties::new();
        if has(&b, t, "id") {
            p.insert("id".into(), PropValue::Int(i as i64));
        }
        if has(&b, t, "w") {
            p.insert("w".into(), PropValue::Int(rng.gen_range(0..5)));
        }
        by_type[t.index()].push(ok(b.add_vertex(i as i64, t, p)));
    }
    let ne = b.schema().edge_type_count();
    if ne == 0 {
        return b.build();
    }
    for _ in 0..m {
        let et = crate::graph::ETypeId(rng.gen_range(0..ne) as u32);
        let tr = b.schema().triplet(et).clone();
        let (ss, ds) = (&by_type[tr.src.index()], &by_type[tr.dst.index()]);
        if ss.is_empty() || ds.is_empty() {
            continue;
        }
        let (s, d) = (
            ss[rng.gen_range(0..ss.len())],
            ds[rng.gen_range(0..ds.len())],
        );
        let mut p = Properties::new();
        if tr.properties.iter().any(|d| d.name == "w") {
            p.insert("w".into(), PropValue::Int(rng.gen_range(0..5)));
        }
        ok(b.add_edge(s, d, et, p));
    }
    b.build()
}

fn random_subset<T: Copy + Ord>(rng: &mut impl Rng, all: &[T]) -> BTreeSet<T> {
    let k = rng.gen_range(1..=all.len().min(2));
    all.choose_multiple(rng, k).copied().collect()
}

/// Random connected pattern with up to `max_vertices` vertices and mixed
/// basic, union and all-type constraints. Not type-checked.
pub fn random_pattern(schema: &GraphSchema, max_vertices: usize, rng: &mut impl Rng) -> Pattern {
    let n = rng.gen_range(1..=max_vertices.max(1));
    let vts: Vec<VTypeId> = schema.vertex_type_ids().collect();
    let ets: Vec<_> = schema.edge_type_ids().collect();
    let mut p = Pattern::new();
    for i in 0..n {
        let c = match rng.gen_range(0..3) {
            0 => VertexConstraint::any_vertex(schema),
            _ => VertexConstraint::of(random_subset(rng, &vts)),
        };
        p.add_vertex(&format!("v{i}"), c);
    }
    let mut pairs = Vec::new();
    for i in 1..n {
        pairs.push((rng.gen_range(0..i), i));
    }
    for _ in 0..rng.gen_range(0..=n) {
        let (a, c) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != c {
            pairs.push((a, c));
        }
    }
    for (k, (a, c)) in pairs.into_iter().enumerate() {
        let (a, c) = if rng.gen_bool(0.5) { (a, c) } else { (c, a) };
        let types = if ets.is_empty() || rng.gen_bool(0.4) {
            EdgeConstraint::any_edge(schema)
        } else {
            EdgeConstraint::of(random_subset(rng, &ets))
        };
        let dir = if rng.gen_bool(0.25) {
            EdgeDir::Both
        } else {
            EdgeDir::Out
        };
        p.add_edge(&format!("e{k}"), a, c, types, dir);
    }
    p
}

/// Random query text over a [`random_schema`] schema. Mixes single- and
/// multi-alias filters, named and anonymous edges, and projections, groups
/// and ordered limits so every rewrite rule gets exercised.
pub fn random_query(schema: &GraphSchema, rng: &mut impl Rng) -> String {
    let n = rng.gen_range(1..=4usize);
    let vnames: Vec<&str> = schema
        .vertex_types()
        .iter()
        .map(|t| t.name.as_str())
        .collect();
    let mut labels: Vec<&str> = schema
        .edge_types()
        .iter()
        .map(|t| t.label.as_str())
        .collect();
    labels.dedup();
    let vlabels: Vec<String> = (0..n)
        .map(|_| {
            if rng.gen_bool(0.5) {
                let k = rng.gen_range(1..=vnames.len().min(2));
                let ls: Vec<&str> = vnames.choose_multiple(rng, k).copied().collect();
                format!(":{}", ls.join("|"))
            } else {
                String::new()
            }
        })
        .collect();
    let mut mentioned = vec![false; n];
    let mut node = |i: usize| {
        let label = if mentioned[i] {
            ""
        } else {
            vlabels[i].as_str()
        };
        mentioned[i] = true;
        format!("(v{i}{label})")
    };
    let mut parts = Vec::new();
    let mut named_edges = Vec::new();
    let mut edges = Vec::new();
    for i in 1..n {
        edges.push((rng.gen_range(0..i), i));
    }
    if n > 2 && rng.gen_bool(0.4) {
        edges.push((0, n - 1));
    }
    for (k, (a, c)) in edges.into_iter().enumerate() {
        let alias = if rng.gen_bool(0.7) {
            named_edges.push(k);
            format!("e{k}")
        } else {
            String::new()
        };
        let label = if !labels.is_empty() && rng.gen_bool(0.5) {
            format!(":{}", labels.choose(rng).unwrap())
        } else {
            String::new()
        };
        let (l, r) = match rng.gen_range(0..4) {
            0 => ("<-", "-"),
            1 => ("-", "-"),
            _ => ("-", "->"),
        };
        let (x, y) = (node(a), node(c));
        parts.push(format!("{x}{l}[{alias}{label}]{r}{y}"));
    }
    if parts.is_empty() {
        parts.push(node(0));
    }
    let v = |rng: &mut dyn rand::RngCore| format!("v{}", rng.gen_range(0..n));
    let mut conds = Vec::new();
    for _ in 0..rng.gen_range(0..=3) {
        conds.push(match rng.gen_range(0..6) {
            0 => format!("{}.w > {}", v(rng), rng.gen_range(0..4)),
            1 => format!("{}.id <> {}", v(rng), rng.gen_range(0..20)),
            2 => format!(
                "{}.w IN [{}, {}]",
                v(rng),
                rng.gen_range(0..5),
                rng.gen_range(0..5)
            ),
            3 => format!("{}.w = {}.w", v(rng), v(rng)),
            4 => format!("({}.w < 2 OR {}.w > 3)", v(rng), v(rng)),
            _ => match named_edges.choose(rng) {
                Some(k) => format!("e{k}.w < {}", rng.gen_range(1..5)),
                None => format!("{}.w >= 1", v(rng)),
            },
        });
    }
    let mut q = format!("MATCH {}", parts.join(", "));
    if !conds.is_empty() {
        q.push_str(&format!(" WHERE {}", conds.join(" AND ")));
    }
    let ret = match rng.gen_range(0..5) {
        0 => format!("RETURN count({})", v(rng)),
        1 => format!("RETURN {}.w AS k, count({}) AS c", v(rng), v(rng)),
        2 => format!("RETURN {}, {}.w", v(rng), v(rng)),
        3 => match named_edges.choose(rng) {
            Some(k) => format!("RETURN e{k}, {}", v(rng)),
            None => format!("RETURN {}.id", v(rng)),
        },
        _ => format!(
            "RETURN {}.id AS a, {}.w AS b ORDER BY a, b DESC LIMIT {}",
            v(rng),
            v(rng),
            rng.gen_range(1..8)
        ),
    };
    q.push(' ');
    q.push_str(&ret);
    q
}

pub const MONEY_MULE_QUERY: &str = "MATCH (p1:PERSON)-[p:*$k]-(p2:PERSON)\n\
WHERE p1.id IN $S1 and p2.id IN $S2\n\
RETURN p";

pub fn money_mule_schema() -> GraphSchema {
    ok(GraphSchema::builder()
        .vertex("PERSON", &[("id", DataType::Integer)])
        .edge(
            "PERSON",
            "TRANSFER",
            "PERSON",
            &[("amount", DataType::Integer)],
        )
        .build())
}

/// How the endpoint sets of the money-mule query are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MuleSets {
    /// Two disjoint uniform samples of accounts with at least one transfer.
    Uniform,
    /// `S1` holds the highest-degree accounts and `S2` low-degree ones.
    HubsToLeaves,
}

/// Transfer graph with heavy-tailed degrees. Returns the graph and the
/// `k`, `S1`, `S2` parameters, with five accounts per set.
pub fn money_mule_graph(
    seed: u64,
    persons: usize,
    transfers: usize,
    k: i64,
    sets: MuleSets,
) -> (PropertyGraph, Params) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = GraphBuilder::new(money_mule_schema());
    let vs: Vec<VertexId> = (0..persons)
        .map(|i| {
            ok(b.add_vertex_named(
                i as i64,
                "PERSON",
                props(&[("id", PropValue::Int(i as i64))]),
            ))
        })
        .collect();
    for _ in 0..transfers {
        let s = skewed(&mut rng, persons);
        let d = skewed(&mut rng, persons);
        if s != d {
            let p = props(&[("amount", PropValue::Int(rng.gen_range(1..10_000)))]);
            ok(b.add_edge_labeled(vs[s], vs[d], "TRANSFER", p));
        }
    }
    let g = b.build();
    let mut by_degree: Vec<(usize, i64)> = (0..persons)
        .map(|i| {
            let v = vs[i];
            (
                g.adjacency(v, true).len() + g.adjacency(v, false).len(),
                i as i64,
            )
        })
        .filter(|x| x.0 > 0)
        .collect();
    by_degree.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let size = 5.min(by_degree.len() / 2);
    let (s1, s2): (Vec<i64>, Vec<i64>) = match sets {
        MuleSets::Uniform => {
            let picked: Vec<i64> = by_degree
                .choose_multiple(&mut rng, 2 * size)
                .map(|x| x.1)
                .collect();
            (picked[..size].to_vec(), picked[size..].to_vec())
        }
        MuleSets::HubsToLeaves => {
            let tail = &by_degree[by_degree.len() - by_degree.len() / 4..];
            (
                by_degree[..size].iter().map(|x| x.1).collect(),
                tail.iter().take(size).map(|x| x.1).collect(),
            )
        }
    };
    let list = |xs: Vec<i64>| Value::List(xs.into_iter().map(Value::Int).collect());
    let params = Params::from([
        ("k".to_string(), Value::Int(k)),
        ("S1".to_string(), list(s1)),
        ("S2".to_string(), list(s2)),
    ]);
    (g, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;
    use crate::typecheck::infer_and_validate;

    #[test]
    fn fig5_counts_are_exact() {
        let g = fig5_graph(1);
        let c = g.type_counts();
        assert_eq!(c.vertices, vec![10, 20, 5]);
        assert_eq!(c.edges, vec![30, 40, 10, 20]);
    }

    #[test]
    fn ldbc_graph_is_desk_scale_and_deterministic() {
        let g = ldbc_graph(7, 1.0);
        assert!((2_000..4_000).contains(&g.vertex_count()));
        assert!((8_000..20_000).contains(&g.edge_count()));
        let h = ldbc_graph(7, 1.0);
        assert_eq!(g.type_counts(), h.type_counts());
    }

    #[test]
    fn every_benchmark_query_parses_and_typechecks() {
        let s = ldbc_schema();
        for (name, q) in LDBC_QUERIES {
            let plan = parse(q, &s).unwrap_or_else(|e| panic!("{name}: {e}"));
            let p = crate::ir::plan_to_pattern(&plan, &s).unwrap();
            assert!(infer_and_validate(&p, &s).is_valid(), "{name}");
        }
        let (g, params) = money_mule_graph(1, 50, 100, 4, MuleSets::Uniform);
        let mule = crate::parser::parse_with_params(MONEY_MULE_QUERY, g.schema(), &params).unwrap();
        assert_eq!(mule.nodes().len(), 3);
    }

    #[test]
    fn random_fixtures_are_well_formed() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let s = random_schema(&mut rng);
            let g = random_graph(s.clone(), 20, 40, &mut rng);
            assert_eq!(g.vertex_count(), 20);
            let p = random_pattern(&s, 4, &mut rng);
            p.validate().unwrap();
            assert!(p.is_connected());
            let q = random_query(&s, &mut rng);
            parse(&q, &s).unwrap_or_else(|e| panic!("{q}: {e}"));
        }
    }

    #[test]
    fn money_mule_sources_are_hubs() {
        let (g, params) = money_mule_graph(5, 400, 1600, 4, MuleSets::HubsToLeaves);
        let Value::List(s1) = &params["S1"] else {
            panic!()
        };
        let Value::List(s2) = &params["S2"] else {
            panic!()
        };
        let deg = |x: &Value| {
            let Value::Int(i) = x else { panic!() };
            let v = g.lookup_external(*i).unwrap();
            g.adjacency(v, true).len() + g.adjacency(v, false).len()
        };
        assert!(s1.iter().map(deg).min() > s2.iter().map(deg).max());
    }
}
