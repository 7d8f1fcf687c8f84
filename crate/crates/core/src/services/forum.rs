use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{DriverId, PollId, PostId, TopicId};
use crate::time::Timestamp;

/// Platform settings a poll can propose a value for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfigKey {
    IncentiveThreshold,
    IncentiveScale,
    OfferWindowSecs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topic {
    pub id: TopicId,
    pub title: String,
    pub creator: DriverId,
    /// Set for location subforums.
    pub location: Option<String>,
    pub created_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Post {
    pub id: PostId,
    pub topic: TopicId,
    pub author: DriverId,
    pub body: String,
    pub at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poll {
    pub id: PollId,
    pub question: String,
    pub options: Vec<String>,
    pub creator: DriverId,
    pub created_at: Timestamp,
    pub config_key: Option<ConfigKey>,
    /// Latest vote per driver; a revote replaces the earlier one.
    pub votes: BTreeMap<DriverId, usize>,
    pub open: bool,
}

impl Poll {
    pub fn tally(&self) -> Vec<usize> {
        let mut counts = vec![0; self.options.len()];
        for &choice in self.votes.values() {
            counts[choice] += 1;
        }
        counts
    }

    /// Most-voted option, lowest index on ties. `None` with no votes.
    pub fn winner(&self) -> Option<usize> {
        let tally = self.tally();
        let best = *tally.iter().max()?;
        if best == 0 {
            return None;
        }
        tally.iter().position(|&c| c == best)
    }
}

/// Emitted when a configuration poll closes with a winner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigProposal {
    pub poll: PollId,
    pub key: ConfigKey,
    pub value: f64,
    pub votes: usize,
    pub voters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum ForumAction {
    CreateTopic { title: String, location: Option<String> },
    Post { topic: TopicId, body: String },
    CreatePoll { question: String, options: Vec<String>, config_key: Option<ConfigKey> },
    Vote { poll: PollId, option: usize },
    ClosePoll { poll: PollId },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "entity", rename_all = "snake_case")]
pub enum ForumEntity {
    Topic(Topic),
    Post(Post),
    Poll(Poll),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForumOutcome {
    pub entity: ForumEntity,
    pub proposal: Option<ConfigProposal>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ForumError {
    #[error("unknown topic {0}")]
    UnknownTopic(TopicId),
    #[error("unknown poll {0}")]
    UnknownPoll(PollId),
    #[error("poll {0} is closed")]
    PollClosed(PollId),
    #[error("option {option} out of range for poll {poll}")]
    InvalidOption { poll: PollId, option: usize },
    #[error("only the poll creator may close poll {0}")]
    NotPollOwner(PollId),
    #[error("invalid forum payload: {0}")]
    InvalidPayload(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Forum {
    topics: BTreeMap<TopicId, Topic>,
    posts: BTreeMap<PostId, Post>,
    polls: BTreeMap<PollId, Poll>,
}

fn next_key<K: Ord + Copy, V>(m: &BTreeMap<K, V>, wrap: impl Fn(u64) -> K, raw: impl Fn(K) -> u64) -> K {
    wrap(m.keys().next_back().map_or(1, |&k| raw(k) + 1))
}

impl Forum {
    pub fn new() -> Self {
        Self::default()
    }

    /// Validates `action` and returns what it would create or change without
    /// touching the forum.
    pub fn plan(&self, actor: &DriverId, action: &ForumAction, clock: Timestamp) -> Result<ForumOutcome, ForumError> {
        let payload = |msg: &str| Err(ForumError::InvalidPayload(msg.to_owned()));
        let entity = match action {
            ForumAction::CreateTopic { title, location } => {
                if title.trim().is_empty() {
                    return payload("topic title must not be empty");
                }
                if location.as_deref().is_some_and(|l| l.trim().is_empty()) {
                    return payload("location must not be blank");
                }
                ForumEntity::Topic(Topic {
                    id: next_key(&self.topics, TopicId, |k| k.0),
                    title: title.clone(),
                    creator: actor.clone(),
                    location: location.clone(),
                    created_at: clock,
                })
            }
            ForumAction::Post { topic, body } => {
                if !self.topics.contains_key(topic) {
                    return Err(ForumError::UnknownTopic(*topic));
                }
                if body.trim().is_empty() {
                    return payload("post body must not be empty");
                }
                ForumEntity::Post(Post {
                    id: next_key(&self.posts, PostId, |k| k.0),
                    topic: *topic,
                    author: actor.clone(),
                    body: body.clone(),
                    at: clock,
                })
            }
            ForumAction::CreatePoll { question, options, config_key } => {
                if question.trim().is_empty() {
                    return payload("poll question must not be empty");
                }
                if options.len() < 2 {
                    return payload("a poll needs at least two options");
                }
                let distinct: BTreeSet<&str> = options.iter().map(|o| o.trim()).collect();
                if distinct.len() != options.len() || distinct.contains("") {
                    return payload("poll options must be distinct and non-empty");
                }
                if config_key.is_some() && options.iter().any(|o| parse_option_value(o).is_none()) {
                    return payload("configuration poll options must be numbers");
                }
                ForumEntity::Poll(Poll {
                    id: next_key(&self.polls, PollId, |k| k.0),
                    question: question.clone(),
                    options: options.clone(),
                    creator: actor.clone(),
                    created_at: clock,
                    config_key: *config_key,
                    votes: BTreeMap::new(),
                    open: true,
                })
            }
            ForumAction::Vote { poll, option } => {
                let mut p = self.open_poll(*poll)?.clone();
                if *option >= p.options.len() {
                    return Err(ForumError::InvalidOption { poll: *poll, option: *option });
                }
                p.votes.insert(actor.clone(), *option);
                ForumEntity::Poll(p)
            }
            ForumAction::ClosePoll { poll } => {
                let mut p = self.open_poll(*poll)?.clone();
                if &p.creator != actor {
                    return Err(ForumError::NotPollOwner(*poll));
                }
                p.open = false;
                let proposal = match (p.config_key, p.winner()) {
                    (Some(key), Some(w)) => Some(ConfigProposal {
                        poll: p.id,
                        key,
                        value: parse_option_value(&p.options[w]).expect("validated at creation"),
                        votes: p.tally()[w],
                        voters: p.votes.len(),
                    }),
                    _ => None,
                };
                return Ok(ForumOutcome { entity: ForumEntity::Poll(p), proposal });
            }
        };
        Ok(ForumOutcome { entity, proposal: None })
    }

    /// Stores an entity produced by [`Forum::plan`].
    pub fn apply(&mut self, entity: ForumEntity) {
        match entity {
            ForumEntity::Topic(t) => {
                self.topics.insert(t.id, t);
            }
            ForumEntity::Post(p) => {
                self.posts.insert(p.id, p);
            }
            ForumEntity::Poll(p) => {
                self.polls.insert(p.id, p);
            }
        }
    }

    pub fn act(&mut self, actor: &DriverId, action: &ForumAction, clock: Timestamp) -> Result<ForumOutcome, ForumError> {
        let outcome = self.plan(actor, action, clock)?;
        self.apply(outcome.entity.clone());
        Ok(outcome)
    }

    fn open_poll(&self, id: PollId) -> Result<&Poll, ForumError> {
        let p = self.polls.get(&id).ok_or(ForumError::UnknownPoll(id))?;
        if !p.open {
            return Err(ForumError::PollClosed(id));
        }
        Ok(p)
    }

    pub fn topic(&self, id: TopicId) -> Option<&Topic> {
        self.topics.get(&id)
    }

    pub fn poll(&self, id: PollId) -> Option<&Poll> {
        self.polls.get(&id)
    }

    pub fn topics(&self) -> impl Iterator<Item = &Topic> {
        self.topics.values()
    }

    pub fn polls(&self) -> impl Iterator<Item = &Poll> {
        self.polls.values()
    }

    /// Topics of one location subforum.
    pub fn subforum<'a>(&'a self, location: &'a str) -> impl Iterator<Item = &'a Topic> + 'a {
        self.topics.values().filter(move |t| t.location.as_deref() == Some(location))
    }

    /// Topics outside any location subforum.
    pub fn general(&self) -> impl Iterator<Item = &Topic> {
        self.topics.values().filter(|t| t.location.is_none())
    }

    pub fn posts_in(&self, topic: TopicId) -> impl Iterator<Item = &Post> {
        self.posts.values().filter(move |p| p.topic == topic)
    }
}

/// Accepts plain numbers, optionally followed by `%` (read as a fraction).
fn parse_option_value(option: &str) -> Option<f64> {
    let s = option.trim();
    let (num, scale) = match s.strip_suffix('%') {
        Some(n) => (n.trim(), 0.01),
        None => (s, 1.0),
    };
    num.parse::<f64>().ok().filter(|v| v.is_finite()).map(|v| v * scale)
}
