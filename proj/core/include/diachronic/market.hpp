#pragma once

// Limit order book for binary futures, an exchange that keeps positions and
// cash for several contracts, and an adapter that executes Sceptic's
// ideal-futures trades through the book.

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "diachronic/engine.hpp"

namespace diachronic::market {

/// Prices are integer ticks of 1e-4.
using Price = std::int64_t;
using Quantity = std::int64_t;
using OrderId = std::uint64_t;
using Time = std::uint64_t;
using ParticipantId = int;
using ContractId = int;

constexpr double kTick = 1e-4;
constexpr Price kTicksPerUnit = 10000;

/// Nearest tick; throws InvalidArgument for non-finite input.
Price to_ticks(double price);
double to_price(Price ticks) noexcept;

enum class Side { Buy, Sell };
enum class OrderKind { Limit, Market };

std::string to_string(Side s);
Side side_from_string(const std::string& s);

struct Order {
  OrderId id = 0;
  ParticipantId owner = 0;
  Side side = Side::Buy;
  OrderKind kind = OrderKind::Limit;
  Price price = 0;
  Quantity quantity = 0;
  Time timestamp = 0;
  std::optional<Time> expiry;
};

struct Fill {
  OrderId taker = 0;
  OrderId maker = 0;
  ParticipantId buyer = 0;
  ParticipantId seller = 0;
  Price price = 0;
  Quantity quantity = 0;
  Time maker_timestamp = 0;
};

enum class LimitStatus {
  Accepted,
  /// The price reaches the opposite side; submit a market order instead.
  RejectedCrossing,
  RejectedInvalid,
};

struct LimitResult {
  LimitStatus status = LimitStatus::RejectedInvalid;
  OrderId id = 0;
};

struct Level {
  Price price;
  Quantity quantity;
};

/// Price-time priority book for one contract. Levels are keyed by tick, each
/// holding a FIFO queue; B_1 < A_1 holds after every operation.
class OrderBook {
 public:
  /// Fills from the best opposite level outward; at the marginal level only
  /// the oldest orders trade. Whatever the book cannot absorb lapses.
  std::vector<Fill> submit_market(ParticipantId owner, Side side, Quantity quantity);
  /// Rests the order at its level, behind older orders at the same price.
  LimitResult submit_limit(ParticipantId owner, Side side, Price price, Quantity quantity,
                           std::optional<Time> expiry = std::nullopt);
  /// Removes every resting order with expiry <= now (inclusive).
  std::vector<OrderId> expire_orders(Time now);
  bool cancel(OrderId id);

  [[nodiscard]] std::optional<Price> best_bid() const;
  [[nodiscard]] std::optional<Price> best_ask() const;
  /// N(x): total resting quantity at a price on one side.
  [[nodiscard]] Quantity depth(Side side, Price price) const;
  /// Levels from best to worst.
  [[nodiscard]] std::vector<Level> levels(Side side) const;
  /// Resting orders at one level, oldest first.
  [[nodiscard]] std::vector<Order> queue(Side side, Price price) const;
  [[nodiscard]] bool empty() const noexcept { return bids_.empty() && asks_.empty(); }
  /// Strict ordering, no empty levels, B_1 < A_1, FIFO timestamps, positive quantities.
  [[nodiscard]] bool valid() const;
  [[nodiscard]] Time clock() const noexcept { return clock_; }

 private:
  using Queue = std::deque<Order>;
  std::map<Price, Queue> bids_;
  std::map<Price, Queue> asks_;
  OrderId next_id_ = 1;
  Time clock_ = 0;
};

struct ContractSpec {
  ContractId id = 0;
  std::string name;
  /// Step at whose end the contract settles.
  int expiration = 1;
  std::optional<Price> settlement;
};

struct Transfer {
  ParticipantId participant;
  /// Cash in units of tick x contract.
  std::int64_t amount;
};

/// Positions and cash for several contracts, each with its own book. Cash is
/// kept in integer units of (tick x contract) so accounting is exact.
/// Positions may be negative: margining is out of scope.
class Exchange {
 public:
  /// The participant that issues bundles; holds the offsetting short legs.
  static constexpr ParticipantId kIssuer = -1;

  ContractId add_contract(std::string name, int expiration);
  /// A set of complementary contracts whose payoffs sum to one.
  int define_bundle(std::vector<ContractId> members);

  std::vector<Fill> submit_market(ContractId c, ParticipantId owner, Side side, Quantity quantity);
  LimitResult submit_limit(ContractId c, ParticipantId owner, Side side, Price price, Quantity quantity,
                           std::optional<Time> expiry = std::nullopt);
  /// Buyer pays count (one unit each) and receives count of every member.
  void issue_bundle(int bundle, ParticipantId buyer, Quantity count);
  /// Pays position x final price to every holder and zeroes the positions.
  std::vector<Transfer> settle(ContractId c, Price final_price);

  [[nodiscard]] const OrderBook& book(ContractId c) const;
  OrderBook& book(ContractId c);
  [[nodiscard]] const ContractSpec& contract(ContractId c) const;
  [[nodiscard]] std::size_t contracts() const noexcept { return specs_.size(); }
  [[nodiscard]] Quantity position(ParticipantId p, ContractId c) const;
  [[nodiscard]] std::int64_t cash(ParticipantId p) const;
  /// Sum of all participants' positions (issuer included); zero by conservation.
  [[nodiscard]] Quantity net_position(ContractId c) const;
  [[nodiscard]] std::int64_t net_cash() const;
  [[nodiscard]] std::vector<ParticipantId> participants() const;

 private:
  void apply(ContractId c, const std::vector<Fill>& fills);
  void check_contract(ContractId c) const;

  std::vector<ContractSpec> specs_;
  std::vector<OrderBook> books_;
  std::vector<std::vector<ContractId>> bundles_;
  std::map<std::pair<ParticipantId, ContractId>, Quantity> positions_;
  std::map<ParticipantId, std::int64_t> cash_;
};

/// Order stream replay for the market demo: one book, events applied in
/// order, orders expiring at or before each event's time removed first.
struct OrderEvent {
  Time time = 0;
  Side side = Side::Buy;
  OrderKind kind = OrderKind::Limit;
  Price price = 0;
  Quantity quantity = 0;
  std::optional<Time> expiry;
  ParticipantId owner = 0;
};

struct ReplayResult {
  std::vector<Fill> fills;
  std::vector<LimitResult> limits;  // one per limit event, in order
  std::vector<OrderId> expired;
  bool always_valid = true;
};

ReplayResult replay_orders(const std::vector<OrderEvent>& events);
std::vector<OrderEvent> parse_order_csv(const std::string& text);
std::string fills_csv(const std::vector<Fill>& fills);

// ---- ideal-futures adapter ----

struct AdapterConfig {
  /// Contracts per position unit; Sceptic's ticket values are rounded to it.
  double lot = 1e-4;
  /// Initial cash, as in K_0.
  double initial_capital = 1.0;
};

struct AdapterResult {
  /// Mark-to-market capital after each price announcement, then after settlement.
  std::vector<double> capital;
  double final_cash = 0.0;
  /// Largest |forecast price - tick price| met while routing.
  double max_price_rounding = 0.0;
  /// Largest |ticket - lot-rounded position| met while routing.
  double max_position_rounding = 0.0;
  std::size_t trades = 0;
  bool books_valid = true;
  Quantity max_abs_net_position = 0;
};

/// Replays a joint-test transcript through final futures contracts Phi(x),
/// x in Y^N: Forecaster's P_n sets the prices of the contracts that extend
/// y_1..y_{n-1}, Sceptic moves from his old position to f_n by trading with a
/// market maker at those prices (a resting limit order and a market order
/// that takes it), and everything settles at 1{x = y_1..y_N}.
AdapterResult route_joint_test(const engine::PlayTranscript& transcript, const AdapterConfig& config = {});

}  // namespace diachronic::market
