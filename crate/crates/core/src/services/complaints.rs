use std::collections::BTreeMap;

use chrono::Duration;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{DriverId, TicketId};
use crate::time::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TicketCategory {
    Pay,
    Safety,
    App,
    Ratings,
    Other,
}

impl TicketCategory {
    pub fn label(self) -> &'static str {
        match self {
            TicketCategory::Pay => "pay",
            TicketCategory::Safety => "safety",
            TicketCategory::App => "app",
            TicketCategory::Ratings => "ratings",
            TicketCategory::Other => "other",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TicketStatus {
    Open,
    InReview,
    Resolved,
    Rejected,
}

impl TicketStatus {
    pub fn label(self) -> &'static str {
        match self {
            TicketStatus::Open => "open",
            TicketStatus::InReview => "in_review",
            TicketStatus::Resolved => "resolved",
            TicketStatus::Rejected => "rejected",
        }
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, TicketStatus::Resolved | TicketStatus::Rejected)
    }

    /// Open -> InReview -> {Resolved, Rejected}. Terminal states are final.
    pub fn can_move_to(self, next: TicketStatus) -> bool {
        matches!(
            (self, next),
            (TicketStatus::Open, TicketStatus::InReview)
                | (TicketStatus::InReview, TicketStatus::Resolved)
                | (TicketStatus::InReview, TicketStatus::Rejected)
        )
    }
}

/// Expected time to completion per category, in hours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SlaTable {
    pub safety_hours: i64,
    pub pay_hours: i64,
    pub ratings_hours: i64,
    pub app_hours: i64,
    pub other_hours: i64,
}

impl Default for SlaTable {
    fn default() -> Self {
        Self { safety_hours: 24, pay_hours: 48, ratings_hours: 72, app_hours: 96, other_hours: 96 }
    }
}

impl SlaTable {
    pub fn expected(&self, category: TicketCategory) -> Duration {
        Duration::hours(match category {
            TicketCategory::Safety => self.safety_hours,
            TicketCategory::Pay => self.pay_hours,
            TicketCategory::Ratings => self.ratings_hours,
            TicketCategory::App => self.app_hours,
            TicketCategory::Other => self.other_hours,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusChange {
    pub status: TicketStatus,
    pub at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplaintTicket {
    pub id: TicketId,
    pub driver: DriverId,
    pub category: TicketCategory,
    pub text: String,
    pub status: TicketStatus,
    pub opened_at: Timestamp,
    pub expected_completion: Timestamp,
    pub history: Vec<StatusChange>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TicketError {
    #[error("complaint text must not be empty")]
    EmptyComplaint,
    #[error("unknown ticket {0}")]
    UnknownTicket(TicketId),
    #[error("illegal status transition {from:?} -> {to:?}")]
    IllegalTransition { from: TicketStatus, to: TicketStatus },
    #[error("status change at {at} is not after last change at {last}")]
    StaleTimestamp { at: Timestamp, last: Timestamp },
}

pub fn open_complaint(
    id: TicketId,
    driver: DriverId,
    category: TicketCategory,
    text: &str,
    clock: Timestamp,
    sla: &SlaTable,
) -> Result<ComplaintTicket, TicketError> {
    if text.trim().is_empty() {
        return Err(TicketError::EmptyComplaint);
    }
    Ok(ComplaintTicket {
        id,
        driver,
        category,
        text: text.to_owned(),
        status: TicketStatus::Open,
        opened_at: clock,
        expected_completion: clock + sla.expected(category),
        history: vec![StatusChange { status: TicketStatus::Open, at: clock }],
    })
}

impl ComplaintTicket {
    pub fn check_advance(&self, to: TicketStatus, clock: Timestamp) -> Result<(), TicketError> {
        if !self.status.can_move_to(to) {
            return Err(TicketError::IllegalTransition { from: self.status, to });
        }
        let last = self.history.last().map(|h| h.at).unwrap_or(self.opened_at);
        if clock <= last {
            return Err(TicketError::StaleTimestamp { at: clock, last });
        }
        Ok(())
    }

    pub fn advance(&self, to: TicketStatus, clock: Timestamp) -> Result<ComplaintTicket, TicketError> {
        self.check_advance(to, clock)?;
        let mut next = self.clone();
        next.status = to;
        next.history.push(StatusChange { status: to, at: clock });
        Ok(next)
    }

    pub fn is_overdue(&self, clock: Timestamp) -> bool {
        !self.status.is_terminal() && clock > self.expected_completion
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TicketBook {
    tickets: BTreeMap<TicketId, ComplaintTicket>,
}

impl TicketBook {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn next_id(&self) -> TicketId {
        TicketId(self.tickets.keys().next_back().map_or(1, |id| id.0 + 1))
    }

    pub fn get(&self, id: TicketId) -> Option<&ComplaintTicket> {
        self.tickets.get(&id)
    }

    pub fn insert(&mut self, ticket: ComplaintTicket) {
        self.tickets.insert(ticket.id, ticket);
    }

    pub fn open(
        &mut self,
        driver: DriverId,
        category: TicketCategory,
        text: &str,
        clock: Timestamp,
        sla: &SlaTable,
    ) -> Result<&ComplaintTicket, TicketError> {
        let ticket = open_complaint(self.next_id(), driver, category, text, clock, sla)?;
        let id = ticket.id;
        self.insert(ticket);
        Ok(&self.tickets[&id])
    }

    pub fn advance(&mut self, id: TicketId, to: TicketStatus, clock: Timestamp) -> Result<&ComplaintTicket, TicketError> {
        let current = self.tickets.get(&id).ok_or(TicketError::UnknownTicket(id))?;
        let next = current.advance(to, clock)?;
        self.tickets.insert(id, next);
        Ok(&self.tickets[&id])
    }

    pub fn for_driver<'a>(&'a self, driver: &'a DriverId) -> impl Iterator<Item = &'a ComplaintTicket> + 'a {
        self.tickets.values().filter(move |t| &t.driver == driver)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ComplaintTicket> {
        self.tickets.values()
    }

    pub fn len(&self) -> usize {
        self.tickets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tickets.is_empty()
    }
}

/// One row per status change: `ticket_id,driver,category,status,at,expected_completion`.
pub fn export_ticket_history_csv<'a>(tickets: impl IntoIterator<Item = &'a ComplaintTicket>) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["ticket_id", "driver", "category", "status", "at", "expected_completion"])?;
    for t in tickets {
        for h in &t.history {
            w.write_record([
                t.id.to_string(),
                t.driver.to_string(),
                t.category.label().to_owned(),
                h.status.label().to_owned(),
                h.at.to_rfc3339(),
                t.expected_completion.to_rfc3339(),
            ])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
