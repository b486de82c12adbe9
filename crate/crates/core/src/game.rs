//! The delivery world: a 4×4 grid of memory locations, each with a four-slot
//! storage array, and a truck that acts as the pointer.
//!
//! States are immutable values. [`GameState::apply`] and [`run`] return new
//! states and never mutate their input.

use alloc::vec::Vec;
use core::fmt;

/// Number of cells along each axis of the grid.
pub const GRID_SIDE: u8 = 4;
/// Number of addressable locations.
pub const LOCATION_COUNT: usize = 16;
/// Capacity of every storage array (truck and locations alike).
pub const SLOT_COUNT: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Item {
    OrangeJuice,
    Milk,
    Soda,
    Coffee,
}

impl Item {
    pub const ALL: [Item; 4] = [Item::OrangeJuice, Item::Milk, Item::Soda, Item::Coffee];

    /// Word used for the item in task prompts.
    pub fn noun(self) -> &'static str {
        match self {
            Item::OrangeJuice => "juice",
            Item::Milk => "milk",
            Item::Soda => "soda",
            Item::Coffee => "coffee",
        }
    }
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Item::OrangeJuice => "orange juice",
            other => other.noun(),
        };
        f.write_str(name)
    }
}

/// A location on the grid, stored as a row-major linear id in `0..16`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "u8", into = "u8"))]
pub struct LocationId(u8);

impl LocationId {
    pub const ORIGIN: LocationId = LocationId(0);

    pub fn new(linear: u8) -> Option<Self> {
        (usize::from(linear) < LOCATION_COUNT).then_some(LocationId(linear))
    }

    pub fn from_coords(row: u8, col: u8) -> Option<Self> {
        if row < GRID_SIDE && col < GRID_SIDE {
            Some(LocationId(row * GRID_SIDE + col))
        } else {
            None
        }
    }

    pub fn linear(self) -> u8 {
        self.0
    }

    pub fn row(self) -> u8 {
        self.0 / GRID_SIDE
    }

    pub fn col(self) -> u8 {
        self.0 % GRID_SIDE
    }

    pub fn all() -> impl Iterator<Item = LocationId> {
        (0..LOCATION_COUNT as u8).map(LocationId)
    }

    fn index(self) -> usize {
        usize::from(self.0)
    }
}

impl TryFrom<u8> for LocationId {
    type Error = InvalidLocation;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        LocationId::new(value).ok_or(InvalidLocation(value))
    }
}

impl From<LocationId> for u8 {
    fn from(value: LocationId) -> Self {
        value.0
    }
}

/// Renders the two-digit `<row><col>` coordinate form.
impl fmt::Display for LocationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.row(), self.col())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("location {0} is outside the 4x4 grid")]
pub struct InvalidLocation(pub u8);

/// A slot index into a storage array, always in `0..4`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "u8", into = "u8"))]
pub struct SlotIndex(u8);

impl SlotIndex {
    pub fn new(index: u8) -> Option<Self> {
        (usize::from(index) < SLOT_COUNT).then_some(SlotIndex(index))
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = SlotIndex> {
        (0..SLOT_COUNT as u8).map(SlotIndex)
    }
}

impl TryFrom<u8> for SlotIndex {
    type Error = InvalidSlot;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        SlotIndex::new(value).ok_or(InvalidSlot(value))
    }
}

impl From<SlotIndex> for u8 {
    fn from(value: SlotIndex) -> Self {
        value.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("slot index {0} is outside 0..=3")]
pub struct InvalidSlot(pub u8);

/// A fixed four-cell storage array.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct Slots([Option<Item>; SLOT_COUNT]);

impl Slots {
    pub const EMPTY: Slots = Slots([None; SLOT_COUNT]);

    pub fn from_cells(cells: [Option<Item>; SLOT_COUNT]) -> Self {
        Slots(cells)
    }

    pub fn get(&self, index: SlotIndex) -> Option<Item> {
        self.0[usize::from(index.0)]
    }

    pub fn cells(&self) -> &[Option<Item>; SLOT_COUNT] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(Option::is_none)
    }

    pub fn count(&self) -> usize {
        self.0.iter().flatten().count()
    }

    pub fn items(&self) -> impl Iterator<Item = Item> + '_ {
        self.0.iter().flatten().copied()
    }

    pub fn first_empty(&self) -> Option<SlotIndex> {
        self.0.iter().position(Option::is_none).map(|i| SlotIndex(i as u8))
    }

    pub fn position_of(&self, item: Item) -> Option<SlotIndex> {
        self.0.iter().position(|c| *c == Some(item)).map(|i| SlotIndex(i as u8))
    }

    fn take(&mut self, index: SlotIndex) -> Option<Item> {
        self.0[usize::from(index.0)].take()
    }

    /// Stores `item` in the lowest-index empty cell.
    fn push(&mut self, item: Item) -> Option<SlotIndex> {
        let slot = self.first_empty()?;
        self.0[usize::from(slot.0)] = Some(item);
        Some(slot)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Command {
    Visit(LocationId),
    Pick(SlotIndex),
    Drop(SlotIndex),
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::Visit(l) => write!(f, "Visit({})", l.linear()),
            Command::Pick(s) => write!(f, "Pick({})", s.get()),
            Command::Drop(s) => write!(f, "Drop({})", s.get()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("slot {slot} at {holder} is empty")]
    EmptySlot { holder: Holder, slot: u8 },
    #[error("no free slot at {holder}")]
    CapacityFull { holder: Holder },
}

/// Which storage array an engine error refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Holder {
    Truck,
    Location(LocationId),
}

impl fmt::Display for Holder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Holder::Truck => f.write_str("the truck"),
            Holder::Location(l) => write!(f, "location {}", l.linear()),
        }
    }
}

/// An engine error annotated with the position of the failing command.
#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("command {index} ({command}): {error}")]
pub struct RunError {
    pub index: usize,
    pub command: Command,
    pub error: EngineError,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GameState {
    truck_at: LocationId,
    truck_slots: Slots,
    location_slots: [Slots; LOCATION_COUNT],
    visit_trace: Vec<LocationId>,
}

impl Default for GameState {
    fn default() -> Self {
        GameState::initial()
    }
}

impl GameState {
    /// The start of every task: truck parked at location 0 with an empty
    /// cargo array, and all four items stored at location 0 in the order
    /// juice, milk, soda, coffee.
    pub fn initial() -> Self {
        let mut location_slots = [Slots::EMPTY; LOCATION_COUNT];
        location_slots[0] = Slots([
            Some(Item::OrangeJuice),
            Some(Item::Milk),
            Some(Item::Soda),
            Some(Item::Coffee),
        ]);
        GameState {
            truck_at: LocationId::ORIGIN,
            truck_slots: Slots::EMPTY,
            location_slots,
            visit_trace: Vec::new(),
        }
    }

    pub fn truck_at(&self) -> LocationId {
        self.truck_at
    }

    pub fn truck_slots(&self) -> &Slots {
        &self.truck_slots
    }

    pub fn slots_at(&self, location: LocationId) -> &Slots {
        &self.location_slots[location.index()]
    }

    pub fn visit_trace(&self) -> &[LocationId] {
        &self.visit_trace
    }

    /// Finds where an item currently is.
    pub fn locate(&self, item: Item) -> Option<(Holder, SlotIndex)> {
        if let Some(slot) = self.truck_slots.position_of(item) {
            return Some((Holder::Truck, slot));
        }
        LocationId::all().find_map(|l| {
            self.slots_at(l)
                .position_of(item)
                .map(|slot| (Holder::Location(l), slot))
        })
    }

    /// Counts of each item kind across the whole world, indexed like
    /// [`Item::ALL`].
    pub fn item_counts(&self) -> [usize; 4] {
        let mut counts = [0; 4];
        let every = self
            .truck_slots
            .items()
            .chain(self.location_slots.iter().flat_map(|s| s.items()));
        for item in every {
            counts[item as usize] += 1;
        }
        counts
    }

    pub fn apply(&self, cmd: Command) -> Result<GameState, EngineError> {
        let mut next = self.clone();
        match cmd {
            Command::Visit(target) => {
                next.truck_at = target;
                next.visit_trace.push(target);
            }
            Command::Pick(slot) => {
                let here = Holder::Location(self.truck_at);
                if self.truck_slots.first_empty().is_none() {
                    if self.slots_at(self.truck_at).get(slot).is_none() {
                        return Err(EngineError::EmptySlot { holder: here, slot: slot.get() });
                    }
                    return Err(EngineError::CapacityFull { holder: Holder::Truck });
                }
                let item = next.location_slots[self.truck_at.index()]
                    .take(slot)
                    .ok_or(EngineError::EmptySlot { holder: here, slot: slot.get() })?;
                next.truck_slots.push(item);
            }
            Command::Drop(slot) => {
                let here = self.truck_at;
                if self.slots_at(here).first_empty().is_none() {
                    if self.truck_slots.get(slot).is_none() {
                        return Err(EngineError::EmptySlot { holder: Holder::Truck, slot: slot.get() });
                    }
                    return Err(EngineError::CapacityFull { holder: Holder::Location(here) });
                }
                let item = next
                    .truck_slots
                    .take(slot)
                    .ok_or(EngineError::EmptySlot { holder: Holder::Truck, slot: slot.get() })?;
                next.location_slots[here.index()].push(item);
            }
        }
        Ok(next)
    }
}

/// Applies `cmds` in order, stopping at the first failing command.
pub fn run(state: &GameState, cmds: &[Command]) -> Result<GameState, RunError> {
    cmds.iter()
        .enumerate()
        .try_fold(state.clone(), |s, (index, &command)| {
            s.apply(command).map_err(|error| RunError { index, command, error })
        })
}

/// Decides whether `actual` completes a task whose expected end state is
/// `reference`.
///
/// Location contents must agree slot for slot and the truck must end on the
/// same location. Truck cargo is compared as a set of items, not by slot.
/// When `required_visits` is given it must appear in order (not necessarily
/// contiguously) within the actual visit trace.
pub fn outcome_matches(
    actual: &GameState,
    reference: &GameState,
    required_visits: Option<&[LocationId]>,
) -> bool {
    if actual.location_slots != reference.location_slots || actual.truck_at != reference.truck_at {
        return false;
    }
    let mut aboard_actual: Vec<Item> = actual.truck_slots.items().collect();
    let mut aboard_reference: Vec<Item> = reference.truck_slots.items().collect();
    aboard_actual.sort();
    aboard_reference.sort();
    if aboard_actual != aboard_reference {
        return false;
    }
    match required_visits {
        Some(required) => is_subsequence(required, &actual.visit_trace),
        None => true,
    }
}

pub fn is_subsequence<T: PartialEq>(needle: &[T], haystack: &[T]) -> bool {
    let mut rest = haystack.iter();
    needle.iter().all(|n| rest.any(|h| h == n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn loc(n: u8) -> LocationId {
        LocationId::new(n).unwrap()
    }

    fn slot(n: u8) -> SlotIndex {
        SlotIndex::new(n).unwrap()
    }

    #[test]
    fn initial_state_layout() {
        let s = GameState::initial();
        assert_eq!(s.slots_at(loc(0)).get(slot(3)), Some(Item::Coffee));
        assert_eq!(s.slots_at(loc(0)).get(slot(0)), Some(Item::OrangeJuice));
        assert_eq!(s.truck_slots().count(), 0);
        assert_eq!(s.item_counts().iter().sum::<usize>(), 4);
        assert!(s.visit_trace().is_empty());
        assert!(LocationId::all().skip(1).all(|l| s.slots_at(l).is_empty()));
    }

    #[test]
    fn picks_fill_lowest_empty_truck_slot() {
        let s = run(
            &GameState::initial(),
            &[Command::Visit(loc(0)), Command::Pick(slot(3)), Command::Pick(slot(1))],
        )
        .unwrap();
        assert_eq!(s.truck_slots().get(slot(0)), Some(Item::Coffee));
        assert_eq!(s.truck_slots().get(slot(1)), Some(Item::Milk));
        assert_eq!(s.truck_slots().count(), 2);
        // source slots left empty, others untouched
        assert_eq!(s.slots_at(loc(0)).cells(), &[Some(Item::OrangeJuice), None, Some(Item::Soda), None]);
    }

    #[test]
    fn drop_does_not_compact_truck() {
        let s = run(
            &GameState::initial(),
            &[
                Command::Pick(slot(3)),
                Command::Pick(slot(1)),
                Command::Visit(loc(6)),
                Command::Drop(slot(0)),
                Command::Visit(loc(8)),
                Command::Drop(slot(1)),
            ],
        )
        .unwrap();
        assert_eq!(s.slots_at(loc(6)).get(slot(0)), Some(Item::Coffee));
        assert_eq!(s.slots_at(loc(8)).get(slot(0)), Some(Item::Milk));
        assert!(s.truck_slots().is_empty());
    }

    #[test]
    fn empty_run_is_identity() {
        let s = GameState::initial();
        assert_eq!(run(&s, &[]).unwrap(), s);
    }

    #[test]
    fn second_pick_of_same_slot_fails_at_index_one() {
        let err = run(&GameState::initial(), &[Command::Pick(slot(0)), Command::Pick(slot(0))]).unwrap_err();
        assert_eq!(err.index, 1);
        assert_eq!(err.error, EngineError::EmptySlot { holder: Holder::Location(loc(0)), slot: 0 });
    }

    #[test]
    fn drop_from_empty_truck_is_empty_slot() {
        let err = GameState::initial().apply(Command::Drop(slot(2))).unwrap_err();
        assert_eq!(err, EngineError::EmptySlot { holder: Holder::Truck, slot: 2 });
    }

    // With only four items in the world a full destination is unreachable
    // from the initial state, so these states are built by hand.
    #[test]
    fn capacity_full_on_location() {
        let mut s = GameState::initial();
        s.truck_slots = Slots([Some(Item::OrangeJuice), None, None, None]);
        s.location_slots[5] = Slots([Some(Item::Milk), Some(Item::Soda), Some(Item::Coffee), Some(Item::Milk)]);
        s.truck_at = loc(5);
        let err = s.apply(Command::Drop(slot(0))).unwrap_err();
        assert_eq!(err, EngineError::CapacityFull { holder: Holder::Location(loc(5)) });
    }

    #[test]
    fn capacity_full_on_truck() {
        let s = run(
            &GameState::initial(),
            &[Command::Pick(slot(0)), Command::Pick(slot(1)), Command::Pick(slot(2)), Command::Pick(slot(3))],
        )
        .unwrap();
        assert_eq!(s.truck_slots().count(), 4);
        let mut over = s.clone();
        over.location_slots[0] = Slots([Some(Item::Milk), None, None, None]);
        assert_eq!(over.apply(Command::Pick(slot(0))).unwrap_err(), EngineError::CapacityFull { holder: Holder::Truck });
        // an empty source slot is reported ahead of the full destination
        assert!(matches!(s.apply(Command::Pick(slot(0))).unwrap_err(), EngineError::EmptySlot { .. }));
    }

    #[test]
    fn visit_moves_nothing() {
        let s = run(&GameState::initial(), &[Command::Pick(slot(2))]).unwrap();
        let t = s.apply(Command::Visit(loc(13))).unwrap();
        assert_eq!(t.truck_slots(), s.truck_slots());
        assert_eq!(t.truck_at(), loc(13));
        assert_eq!(t.visit_trace(), &[loc(13)]);
    }

    #[test]
    fn outcome_is_reflexive() {
        let s = GameState::initial();
        assert!(outcome_matches(&s, &s, None));
    }

    #[test]
    fn outcome_ignores_truck_slot_order() {
        let a = run(&GameState::initial(), &[Command::Pick(slot(0)), Command::Pick(slot(1))]).unwrap();
        let b = run(&GameState::initial(), &[Command::Pick(slot(1)), Command::Pick(slot(0))]).unwrap();
        assert_ne!(a.truck_slots(), b.truck_slots());
        assert!(outcome_matches(&a, &b, None));
    }

    #[test]
    fn outcome_checks_truck_position() {
        let a = GameState::initial().apply(Command::Visit(loc(1))).unwrap();
        assert!(!outcome_matches(&a, &GameState::initial(), None));
    }

    #[test]
    fn subsequence_semantics() {
        assert!(is_subsequence(&[1, 3], &[1, 2, 3]));
        assert!(!is_subsequence(&[3, 1], &[1, 2, 3]));
        assert!(is_subsequence::<u8>(&[], &[]));
        assert!(!is_subsequence(&[1, 1], &[1]));
        let v = vec![5u8, 6, 8, 7, 9];
        assert!(!is_subsequence(&[5, 6, 7, 8, 9], &v));
    }

    #[test]
    fn location_coordinates() {
        assert_eq!(LocationId::from_coords(2, 1), Some(loc(9)));
        assert_eq!(loc(15).row(), 3);
        assert_eq!(loc(15).col(), 3);
        assert_eq!(alloc::format!("{}", loc(6)), "12");
        assert!(LocationId::new(16).is_none());
        assert!(LocationId::from_coords(4, 0).is_none());
        assert!(SlotIndex::new(4).is_none());
    }
}
