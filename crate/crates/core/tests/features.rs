use cyberaggr_core::data::{Gender, Post, Profile, UserRecord};
use cyberaggr_core::embedding::EmbeddingTable;
use cyberaggr_core::features::{
    Block, BlockSet, Emotion, EmotionLexicon, ExtractorConfig, FeatureExtractor, WordVectorTable, BASIC_NAMES,
    CONTENT_WIDTH, TRANSFORMER_WIDTH,
};
use cyberaggr_core::time::{LocalClock, Timestamp};
use proptest::prelude::*;

const T0: i64 = 1_577_836_800; // 2020-01-01T00:00:00Z
const PIECES: [&str; 12] = ["今天", "天气", "好", "@小明 ", "#话题#", "？", "！", "[哈哈]", "[怒]", "http://t.cn/x ", "生气", "开心"];

fn clock() -> LocalClock {
    LocalClock { utc_offset_secs: 8 * 3600 }
}

fn word_vectors() -> WordVectorTable {
    let mut t = WordVectorTable::new(CONTENT_WIDTH);
    for (i, tok) in ["今天", "天气", "好", "生气", "开心"].iter().enumerate() {
        let v: Vec<f64> = (0..CONTENT_WIDTH).map(|d| ((i * 31 + d) % 17) as f64 / 17.0 - 0.5).collect();
        t.insert(*tok, &v).unwrap();
    }
    t
}

fn lexicon() -> EmotionLexicon {
    let mut l = EmotionLexicon::new();
    l.insert("生气", Emotion::Anger).unwrap();
    l.insert("[怒]", Emotion::Anger).unwrap();
    l.insert("开心", Emotion::Happiness).unwrap();
    l.insert("[哈哈]", Emotion::Happiness).unwrap();
    l
}

fn embeddings(user: &str) -> EmbeddingTable {
    let mut t = EmbeddingTable::new(TRANSFORMER_WIDTH, "test");
    t.insert(user, (0..TRANSFORMER_WIDTH).map(|d| d as f64 * 1e-3).collect()).unwrap();
    t
}

prop_compose! {
    fn post(index: usize)(
        offset in 0i64..200 * 86_400,
        pieces in prop::collection::vec(0usize..PIECES.len(), 0..6),
        picture in any::<bool>(),
        retweet in any::<bool>(),
    ) -> Post {
        let text: String = pieces.iter().map(|&i| PIECES[i]).collect();
        Post::from_text(format!("p{index:03}"), Timestamp::from_unix(T0 + offset), text, picture, retweet)
    }
}

fn posts() -> impl Strategy<Value = Vec<Post>> {
    (0usize..40).prop_flat_map(|n| (0..n).map(post).collect::<Vec<_>>())
}

fn profile(description: &str) -> Profile {
    Profile {
        user_id: "u1".into(),
        gender: Gender::Female,
        verified: false,
        follower_count: 120,
        followee_count: 80,
        description: description.into(),
    }
}

fn all_blocks() -> BlockSet {
    BlockSet::new(Block::ALL)
}

fn extract(user: &UserRecord) -> Vec<f64> {
    let (wv, lex, emb) = (word_vectors(), lexicon(), embeddings("u1"));
    let fx = FeatureExtractor {
        config: ExtractorConfig { clock: clock() },
        word_vectors: Some(&wv),
        lexicon: Some(&lex),
        embeddings: Some(&emb),
    };
    fx.assemble(user, &all_blocks()).unwrap().features.concat()
}

fn local_day(ts: Timestamp) -> i64 {
    (ts.unix() + 8 * 3600).div_euclid(86_400)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn extraction_is_deterministic_and_order_free(ps in posts(), seed in any::<u64>()) {
        let a = UserRecord::new(profile("今天好"), ps.clone()).0;
        let mut shuffled = ps;
        let mut r = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), &mut r);
        let b = UserRecord::new(profile("今天好"), shuffled).0;
        let (fa, fa2, fb) = (extract(&a), extract(&a), extract(&b));
        prop_assert_eq!(fa.len(), all_blocks().width());
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&fa), bits(&fa2));
        prop_assert_eq!(bits(&fa), bits(&fb));
        prop_assert!(fa.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn proportions_and_entropies_are_bounded(ps in posts()) {
        let user = UserRecord::new(profile(""), ps).0;
        let f = extract(&user);
        for (name, v) in BASIC_NAMES.iter().zip(&f[..41]) {
            if name.starts_with("prop_") || name.ends_with("_proportion") || *name == "verified" || *name == "description_present" {
                prop_assert!((0.0..=1.0).contains(v), "{} = {}", name, v);
            }
        }
        let at = |n: &str| f[BASIC_NAMES.iter().position(|x| *x == n).unwrap()];
        prop_assert!((0.0..=24f64.ln() + 1e-12).contains(&at("hour_entropy")));
        prop_assert!((0.0..=7f64.ln() + 1e-12).contains(&at("weekday_entropy")));
        let emotion = &f[41 + 93 + CONTENT_WIDTH..41 + 93 + CONTENT_WIDTH + 5];
        prop_assert!(emotion.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert!(emotion.iter().sum::<f64>() <= 1.0 + 1e-12);
    }

    #[test]
    fn dynamic_rates_conserve_post_counts(ps in posts()) {
        prop_assume!(!ps.is_empty());
        let user = UserRecord::new(profile(""), ps).0;
        let n = user.posts.len() as f64;
        let first = local_day(user.posts.first().unwrap().timestamp);
        let last = local_day(user.posts.last().unwrap().timestamp);
        let days = (last - first + 1) as f64;
        let dynamic = &extract(&user)[41..41 + 93];
        let posting = &dynamic[..31];
        prop_assert!((posting[..24].iter().sum::<f64>() * days - n).abs() < 1e-9);
        prop_assert!((posting[24..].iter().sum::<f64>() * days / 7.0 - n).abs() < 1e-9);
        let retweets = user.posts.iter().filter(|p| p.is_retweet).count() as f64;
        prop_assert!((dynamic[62..86].iter().sum::<f64>() * days - retweets).abs() < 1e-9);
    }

    #[test]
    fn content_of_identical_documents_is_that_vector(n in 1usize..30, spread in 0i64..90) {
        let ps: Vec<Post> = (0..n)
            .map(|i| Post::from_text(format!("p{i}"), Timestamp::from_unix(T0 + i as i64 * spread * 3600), "开心", false, false))
            .collect();
        let user = UserRecord::new(profile(""), ps).0;
        let f = extract(&user);
        let wv = word_vectors();
        let v = wv.get("开心").unwrap();
        prop_assert_eq!(&f[134..134 + CONTENT_WIDTH], v);
    }
}
