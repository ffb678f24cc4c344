#include "diachronic/market.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "diachronic/error.hpp"

namespace diachronic::market {

namespace si = measures::seq_index;

Price to_ticks(double price) {
  require(std::isfinite(price), "price must be finite");
  return static_cast<Price>(std::llround(price * static_cast<double>(kTicksPerUnit)));
}

double to_price(Price ticks) noexcept { return static_cast<double>(ticks) / static_cast<double>(kTicksPerUnit); }

std::string to_string(Side s) { return s == Side::Buy ? "buy" : "sell"; }

Side side_from_string(const std::string& s) {
  if (s == "buy" || s == "B" || s == "b") return Side::Buy;
  if (s == "sell" || s == "S" || s == "s") return Side::Sell;
  throw InvalidArgument("unknown order side '" + s + "'");
}

// ---- order book ----

std::vector<Fill> OrderBook::submit_market(ParticipantId owner, Side side, Quantity quantity) {
  require(quantity > 0, "market order quantity must be positive");
  const OrderId id = next_id_++;
  ++clock_;
  std::vector<Fill> fills;
  auto& opposite = side == Side::Buy ? asks_ : bids_;
  Quantity remaining = quantity;
  while (remaining > 0 && !opposite.empty()) {
    // Best level: lowest ask for a buy, highest bid for a sell.
    auto level = side == Side::Buy ? opposite.begin() : std::prev(opposite.end());
    Queue& q = level->second;
    while (remaining > 0 && !q.empty()) {
      Order& resting = q.front();
      const Quantity traded = std::min(remaining, resting.quantity);
      Fill f;
      f.taker = id;
      f.maker = resting.id;
      f.buyer = side == Side::Buy ? owner : resting.owner;
      f.seller = side == Side::Buy ? resting.owner : owner;
      f.price = level->first;
      f.quantity = traded;
      f.maker_timestamp = resting.timestamp;
      fills.push_back(f);
      remaining -= traded;
      resting.quantity -= traded;
      if (resting.quantity == 0) q.pop_front();
    }
    if (q.empty()) opposite.erase(level);
  }
  return fills;
}

LimitResult OrderBook::submit_limit(ParticipantId owner, Side side, Price price, Quantity quantity,
                                    std::optional<Time> expiry) {
  if (quantity <= 0 || price <= 0 || price >= kTicksPerUnit) return {LimitStatus::RejectedInvalid, 0};
  if (side == Side::Buy && !asks_.empty() && price >= asks_.begin()->first) return {LimitStatus::RejectedCrossing, 0};
  if (side == Side::Sell && !bids_.empty() && price <= bids_.rbegin()->first)
    return {LimitStatus::RejectedCrossing, 0};
  Order o;
  o.id = next_id_++;
  o.owner = owner;
  o.side = side;
  o.kind = OrderKind::Limit;
  o.price = price;
  o.quantity = quantity;
  o.timestamp = ++clock_;
  o.expiry = expiry;
  (side == Side::Buy ? bids_ : asks_)[price].push_back(o);
  return {LimitStatus::Accepted, o.id};
}

std::vector<OrderId> OrderBook::expire_orders(Time now) {
  std::vector<OrderId> removed;
  for (auto* book : {&bids_, &asks_}) {
    for (auto it = book->begin(); it != book->end();) {
      Queue& q = it->second;
      std::erase_if(q, [&](const Order& o) {
        const bool gone = o.expiry && *o.expiry <= now;
        if (gone) removed.push_back(o.id);
        return gone;
      });
      it = q.empty() ? book->erase(it) : std::next(it);
    }
  }
  std::sort(removed.begin(), removed.end());
  return removed;
}

bool OrderBook::cancel(OrderId id) {
  for (auto* book : {&bids_, &asks_})
    for (auto it = book->begin(); it != book->end(); ++it) {
      Queue& q = it->second;
      const auto pos = std::find_if(q.begin(), q.end(), [id](const Order& o) { return o.id == id; });
      if (pos == q.end()) continue;
      q.erase(pos);
      if (q.empty()) book->erase(it);
      return true;
    }
  return false;
}

std::optional<Price> OrderBook::best_bid() const {
  if (bids_.empty()) return std::nullopt;
  return bids_.rbegin()->first;
}

std::optional<Price> OrderBook::best_ask() const {
  if (asks_.empty()) return std::nullopt;
  return asks_.begin()->first;
}

Quantity OrderBook::depth(Side side, Price price) const {
  const auto& book = side == Side::Buy ? bids_ : asks_;
  const auto it = book.find(price);
  if (it == book.end()) return 0;
  Quantity total = 0;
  for (const auto& o : it->second) total += o.quantity;
  return total;
}

std::vector<Level> OrderBook::levels(Side side) const {
  std::vector<Level> out;
  auto add = [&](const auto& entry) {
    Quantity total = 0;
    for (const auto& o : entry.second) total += o.quantity;
    out.push_back({entry.first, total});
  };
  if (side == Side::Buy)
    for (auto it = bids_.rbegin(); it != bids_.rend(); ++it) add(*it);
  else
    for (const auto& entry : asks_) add(entry);
  return out;
}

std::vector<Order> OrderBook::queue(Side side, Price price) const {
  const auto& book = side == Side::Buy ? bids_ : asks_;
  const auto it = book.find(price);
  if (it == book.end()) return {};
  return {it->second.begin(), it->second.end()};
}

bool OrderBook::valid() const {
  for (const auto* book : {&bids_, &asks_})
    for (const auto& [price, q] : *book) {
      if (q.empty() || price <= 0 || price >= kTicksPerUnit) return false;
      Time last = 0;
      for (const auto& o : q) {
        if (o.quantity <= 0 || o.price != price || o.timestamp <= last) return false;
        last = o.timestamp;
      }
    }
  // std::map keeps levels strictly ordered; the spread is the one cross-side check.
  return bids_.empty() || asks_.empty() || bids_.rbegin()->first < asks_.begin()->first;
}

// ---- exchange ----

ContractId Exchange::add_contract(std::string name, int expiration) {
  require(expiration >= 1, "expiration step must be positive");
  const auto id = static_cast<ContractId>(specs_.size());
  specs_.push_back({id, std::move(name), expiration, std::nullopt});
  books_.emplace_back();
  return id;
}

void Exchange::check_contract(ContractId c) const {
  require(c >= 0 && static_cast<std::size_t>(c) < specs_.size(), "unknown contract");
}

int Exchange::define_bundle(std::vector<ContractId> members) {
  require(members.size() >= 2, "a bundle needs at least two complementary contracts");
  for (ContractId c : members) check_contract(c);
  auto sorted = members;
  std::sort(sorted.begin(), sorted.end());
  require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), "bundle members must be distinct");
  bundles_.push_back(std::move(members));
  return static_cast<int>(bundles_.size()) - 1;
}

void Exchange::apply(ContractId c, const std::vector<Fill>& fills) {
  for (const auto& f : fills) {
    positions_[{f.buyer, c}] += f.quantity;
    positions_[{f.seller, c}] -= f.quantity;
    cash_[f.buyer] -= f.quantity * f.price;
    cash_[f.seller] += f.quantity * f.price;
  }
}

std::vector<Fill> Exchange::submit_market(ContractId c, ParticipantId owner, Side side, Quantity quantity) {
  check_contract(c);
  require(!specs_[static_cast<std::size_t>(c)].settlement, "contract already settled");
  auto fills = books_[static_cast<std::size_t>(c)].submit_market(owner, side, quantity);
  apply(c, fills);
  return fills;
}

LimitResult Exchange::submit_limit(ContractId c, ParticipantId owner, Side side, Price price, Quantity quantity,
                                   std::optional<Time> expiry) {
  check_contract(c);
  require(!specs_[static_cast<std::size_t>(c)].settlement, "contract already settled");
  return books_[static_cast<std::size_t>(c)].submit_limit(owner, side, price, quantity, expiry);
}

void Exchange::issue_bundle(int bundle, ParticipantId buyer, Quantity count) {
  require(bundle >= 0 && static_cast<std::size_t>(bundle) < bundles_.size(), "undefined bundle");
  require(count >= 0, "bundle count must be nonnegative");
  if (count == 0) return;
  for (ContractId c : bundles_[static_cast<std::size_t>(bundle)]) {
    positions_[{buyer, c}] += count;
    positions_[{kIssuer, c}] -= count;
  }
  cash_[buyer] -= count * kTicksPerUnit;
  cash_[kIssuer] += count * kTicksPerUnit;
}

std::vector<Transfer> Exchange::settle(ContractId c, Price final_price) {
  check_contract(c);
  auto& spec = specs_[static_cast<std::size_t>(c)];
  if (spec.settlement) throw InvalidState("contract '" + spec.name + "' is already settled");
  require(final_price >= 0 && final_price <= kTicksPerUnit, "final price must lie in [0, 1]");
  spec.settlement = final_price;
  std::vector<Transfer> out;
  for (auto& [key, pos] : positions_) {
    if (key.second != c) continue;
    const std::int64_t amount = pos * final_price;
    out.push_back({key.first, amount});
    cash_[key.first] += amount;
    pos = 0;
  }
  return out;
}

const OrderBook& Exchange::book(ContractId c) const {
  check_contract(c);
  return books_[static_cast<std::size_t>(c)];
}

OrderBook& Exchange::book(ContractId c) {
  check_contract(c);
  return books_[static_cast<std::size_t>(c)];
}

const ContractSpec& Exchange::contract(ContractId c) const {
  check_contract(c);
  return specs_[static_cast<std::size_t>(c)];
}

Quantity Exchange::position(ParticipantId p, ContractId c) const {
  const auto it = positions_.find({p, c});
  return it == positions_.end() ? 0 : it->second;
}

std::int64_t Exchange::cash(ParticipantId p) const {
  const auto it = cash_.find(p);
  return it == cash_.end() ? 0 : it->second;
}

Quantity Exchange::net_position(ContractId c) const {
  Quantity total = 0;
  for (const auto& [key, pos] : positions_)
    if (key.second == c) total += pos;
  return total;
}

std::int64_t Exchange::net_cash() const {
  std::int64_t total = 0;
  for (const auto& [p, v] : cash_) total += v;
  return total;
}

std::vector<ParticipantId> Exchange::participants() const {
  std::vector<ParticipantId> out;
  for (const auto& [p, v] : cash_) out.push_back(p);
  for (const auto& [key, pos] : positions_) out.push_back(key.first);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// ---- replay ----

ReplayResult replay_orders(const std::vector<OrderEvent>& events) {
  ReplayResult out;
  OrderBook book;
  for (const auto& e : events) {
    const auto gone = book.expire_orders(e.time);
    out.expired.insert(out.expired.end(), gone.begin(), gone.end());
    if (e.kind == OrderKind::Market) {
      const auto fills = book.submit_market(e.owner, e.side, e.quantity);
      out.fills.insert(out.fills.end(), fills.begin(), fills.end());
    } else {
      out.limits.push_back(book.submit_limit(e.owner, e.side, e.price, e.quantity, e.expiry));
    }
    out.always_valid = out.always_valid && book.valid();
  }
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::vector<OrderEvent> parse_order_csv(const std::string& text) {
  std::vector<OrderEvent> out;
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split_csv_line(line);
    if (line_no == 1 && !cells.empty() && cells[0] == "timestamp") continue;
    require(cells.size() >= 5 && cells.size() <= 7,
            "order CSV line " + std::to_string(line_no) + ": expected timestamp,side,kind,price,qty[,expiry[,owner]]");
    try {
      OrderEvent e;
      e.time = std::stoull(cells[0]);
      e.side = side_from_string(cells[1]);
      if (cells[2] == "limit")
        e.kind = OrderKind::Limit;
      else if (cells[2] == "market")
        e.kind = OrderKind::Market;
      else
        throw InvalidArgument("unknown order kind '" + cells[2] + "'");
      if (e.kind == OrderKind::Limit) e.price = to_ticks(std::stod(cells[3]));
      e.quantity = std::stoll(cells[4]);
      if (cells.size() >= 6 && !cells[5].empty()) e.expiry = std::stoull(cells[5]);
      if (cells.size() == 7 && !cells[6].empty()) e.owner = std::stoi(cells[6]);
      out.push_back(e);
    } catch (const std::logic_error& err) {
      throw InvalidArgument("order CSV line " + std::to_string(line_no) + ": " + err.what());
    }
  }
  return out;
}

std::string fills_csv(const std::vector<Fill>& fills) {
  std::ostringstream os;
  os << "taker,maker,buyer,seller,price,quantity\n";
  for (const auto& f : fills) {
    char price[32];
    std::snprintf(price, sizeof price, "%.4f", to_price(f.price));
    os << f.taker << ',' << f.maker << ',' << f.buyer << ',' << f.seller << ',' << price << ',' << f.quantity << '\n';
  }
  return os.str();
}

// ---- adapter ----

AdapterResult route_joint_test(const engine::PlayTranscript& transcript, const AdapterConfig& config) {
  const auto& cfg = transcript.config;
  const auto& rec = transcript.record;
  require(cfg.protocol == engine::ProtocolId::JointTest, "the adapter replays joint-test plays");
  require(config.lot > 0.0, "lot size must be positive");
  const int N = cfg.N;
  const int A = cfg.alphabet;
  require(static_cast<int>(rec.outcomes.size()) == N && static_cast<int>(rec.forecasts.size()) == N &&
              static_cast<int>(rec.sceptic_moves.size()) == N,
          "the adapter needs a completed play");

  constexpr ParticipantId kSceptic = 0;
  constexpr ParticipantId kMaker = 1;
  Exchange ex;
  const std::size_t paths = si::count(A, N);
  for (std::size_t x = 0; x < paths; ++x) ex.add_contract("phi:" + std::to_string(x), N);

  AdapterResult out;
  const double unit = kTick * config.lot;  // money per cash unit
  auto money = [&] { return config.initial_capital + static_cast<double>(ex.cash(kSceptic)) * unit; };
  std::vector<Price> price(paths, 0);
  out.capital.push_back(config.initial_capital);

  for (int n = 1; n <= N; ++n) {
    const int len = N - n + 1;
    const measures::Sequence prefix(rec.outcomes.begin(), rec.outcomes.begin() + (n - 1));
    const std::size_t prefix_code = si::encode(prefix, A);
    const auto& P = rec.forecasts[static_cast<std::size_t>(n - 1)];
    const auto& f = rec.sceptic_moves[static_cast<std::size_t>(n - 1)];
    // Contracts that no longer extend the observed prefix are worth 0.
    std::fill(price.begin(), price.end(), 0);
    for (std::size_t s = 0; s < P.size(); ++s) {
      const std::size_t x = si::concat(prefix_code, s, len, A);
      price[x] = to_ticks(P.weight(s));
      out.max_price_rounding = std::max(out.max_price_rounding, std::abs(to_price(price[x]) - P.weight(s)));
      require(price[x] > 0 && price[x] < kTicksPerUnit, "forecast price rounds outside (0, 1)");
    }
    if (n >= 2) {
      double marked = money();
      for (std::size_t x = 0; x < paths; ++x)
        marked += static_cast<double>(ex.position(kSceptic, static_cast<ContractId>(x))) * config.lot * to_price(price[x]);
      out.capital.push_back(marked);
    }
    for (std::size_t s = 0; s < P.size(); ++s) {
      const auto x = static_cast<ContractId>(si::concat(prefix_code, s, len, A));
      const double ticket = f.value(len, s);
      const auto target = static_cast<Quantity>(std::llround(ticket / config.lot));
      out.max_position_rounding =
          std::max(out.max_position_rounding, std::abs(static_cast<double>(target) * config.lot - ticket));
      const Quantity delta = target - ex.position(kSceptic, x);
      if (delta == 0) continue;
      const Side maker_side = delta > 0 ? Side::Sell : Side::Buy;
      const Side taker_side = delta > 0 ? Side::Buy : Side::Sell;
      const auto placed = ex.submit_limit(x, kMaker, maker_side, price[static_cast<std::size_t>(x)], std::abs(delta));
      require(placed.status == LimitStatus::Accepted, "market maker quote was rejected");
      const auto fills = ex.submit_market(x, kSceptic, taker_side, std::abs(delta));
      out.trades += fills.size();
      out.books_valid = out.books_valid && ex.book(x).valid() && ex.book(x).empty();
    }
  }
  const std::size_t realized = si::encode(rec.outcomes, A);
  for (std::size_t x = 0; x < paths; ++x) {
    out.max_abs_net_position = std::max(out.max_abs_net_position, std::abs(ex.net_position(static_cast<ContractId>(x))));
    ex.settle(static_cast<ContractId>(x), x == realized ? kTicksPerUnit : 0);
  }
  out.final_cash = money();
  out.capital.push_back(out.final_cash);
  return out;
}

}  // namespace diachronic::market
