#![allow(dead_code)]

use bihet::graph::{Dataset, EdgeRecord, Relation, TweetRecord, UserRecord};

pub fn user(id: &str, statuses: u64) -> UserRecord {
    UserRecord {
        external_id: id.to_string(),
        followers: 10,
        friends: 5,
        listed: 1,
        statuses,
        favorites: 3,
        verified: false,
        description_text: Some(format!("profile of {id}")),
        description_vec: None,
        synthetic: false,
    }
}

pub fn tweet(id: &str, author: &str) -> TweetRecord {
    TweetRecord {
        external_id: id.to_string(),
        author_external_id: author.to_string(),
        text: Some(format!("text of {id}")),
        has_image: false,
        author: None,
        text_vec: None,
        image_vec: None,
    }
}

pub fn edge(user: &str, tweet: &str, relation: Relation) -> EdgeRecord {
    EdgeRecord {
        user_external_id: user.to_string(),
        tweet_external_id: tweet.to_string(),
        relation,
    }
}

/// One tweet posted by `u0` and retweeted by `u1` and `u2`: a star with the tweet
/// at its centre.
pub fn star() -> Dataset {
    Dataset {
        users: vec![user("u0", 3), user("u1", 0), user("u2", 40)],
        tweets: vec![tweet("t0", "u0")],
        edges: vec![
            edge("u0", "t0", Relation::Post),
            edge("u1", "t0", Relation::Retweet),
            edge("u2", "t0", Relation::Retweet),
        ],
    }
}
