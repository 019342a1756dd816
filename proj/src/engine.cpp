#include "roadbird/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

namespace roadbird {

namespace {
constexpr double kFarAway = 1e18;
constexpr double kTimeEps = 1e-9;
// Penetration below this depth is floating-point residue, not contact.
constexpr double kOverlapTolerance = 1e-9;
}  // namespace

struct FileEventSink::Impl {
  std::FILE* file = nullptr;
  std::vector<char> buffer;
};

FileEventSink::FileEventSink(const std::string& path) : impl_(new Impl) {
  impl_->file = std::fopen(path.c_str(), "wb");
  if (!impl_->file)
    throw std::runtime_error(fmt::format("cannot open event log '{}'", path));
  impl_->buffer.resize(1 << 20);
  std::setvbuf(impl_->file, impl_->buffer.data(), _IOFBF, impl_->buffer.size());
}

FileEventSink::~FileEventSink() {
  if (impl_->file) std::fclose(impl_->file);
}

void FileEventSink::line(std::string_view text) {
  std::fwrite(text.data(), 1, text.size(), impl_->file);
  std::fputc('\n', impl_->file);
}

Simulation::Simulation(const RoadNetwork& network, const FleetMix& mix,
                       const EngineConfig& config, std::uint64_t seed,
                       EventSink* sink)
    : net_(network), mix_(mix), cfg_(config), rng_(seed), sink_(sink),
      metrics_(network.links().size()) {
  const std::size_t n_links = net_.links().size();
  members_.resize(n_links);
  order_.resize(n_links);
  strips_.resize(n_links);
  for (std::size_t i = 0; i < n_links; ++i)
    strips_[i].resize(static_cast<std::size_t>(net_.strip_counts()[i]));
  for (const ClassShare& s : mix_.shares())
    max_vehicle_length_ = std::max(max_vehicle_length_, s.vehicle.length);
  ped_by_link_.resize(n_links);
}

void Simulation::schedule_demand(const DemandProfile& demand, double horizon,
                                 RateScope scope) {
  const auto& nodes = net_.generating_nodes();
  if (nodes.empty()) return;
  DemandProfile node_demand = demand;
  if (scope == RateScope::total)
    node_demand.rate_vph = demand.rate_vph / static_cast<double>(nodes.size());

  for (int node_id : nodes) {
    const std::vector<double> times =
        generate_arrivals(node_demand, horizon, rng_);
    for (double t : times) {
      const VehicleClass& cls = mix_.sample(rng_);
      const std::size_t class_index = mix_.index_of(cls);
      const int span = occupied_strips(cls.width, net_.strip_width());

      std::vector<int> fitting;
      for (int path_id : net_.paths_from(node_id)) {
        const Path& p = net_.path(path_id);
        bool fits = true;
        for (int link_id : p.links)
          if (net_.strips(link_id) < span) {
            fits = false;
            break;
          }
        if (fits) fitting.push_back(path_id);
      }
      if (fitting.empty()) {
        ++counters_.rejected_arrivals;
        continue;
      }
      const int path_id = fitting[rng_.uniform_index(fitting.size())];
      schedule_.push_back({t, node_id, path_id, class_index});
    }
  }
  std::stable_sort(schedule_.begin(), schedule_.end(),
                   [](const ScheduledArrival& a, const ScheduledArrival& b) {
                     return a.time < b.time;
                   });
}

void Simulation::schedule_arrivals(std::vector<ScheduledArrival> arrivals) {
  schedule_ = std::move(arrivals);
  std::stable_sort(schedule_.begin(), schedule_.end(),
                   [](const ScheduledArrival& a, const ScheduledArrival& b) {
                     return a.time < b.time;
                   });
}

void Simulation::step() {
  const double t0 = clock_;
  const double t1 = clock_ + cfg_.timestep;
  rebuild_order();
  spawn_phase(t0);
  if (cfg_.pedestrian_mode) pedestrian_phase(t0);
  lane_change_phase();
  speed_phase();
  advance_phase(t1);
  transfer_phase(t1);
  audit_phase(t1);
  clock_ = t1;
}

void Simulation::run(double horizon) {
  while (clock_ + cfg_.timestep <= horizon + kTimeEps) step();
  if (finalized_) return;
  finalized_ = true;
  for (const VehicleState& v : vehicles_) {
    if (v.retired) continue;
    metrics_.record_unfinished({v.id, v.total_distance, clock_ - v.entry_time});
  }
}

void Simulation::rebuild_order() {
  for (std::size_t l = 0; l < members_.size(); ++l) {
    auto& ord = order_[l];
    ord.clear();
    for (int id : members_[l]) ord.push_back(static_cast<std::size_t>(id - 1));
    std::sort(ord.begin(), ord.end(), [this](std::size_t a, std::size_t b) {
      const VehicleState& va = vehicles_[a];
      const VehicleState& vb = vehicles_[b];
      if (va.position != vb.position) return va.position > vb.position;
      return va.id < vb.id;
    });
    for (std::size_t i = 0; i < ord.size(); ++i)
      vehicles_[ord[i]].order_index = i;
  }
}

void Simulation::spawn_phase(double t0) {
  while (schedule_cursor_ < schedule_.size() &&
         schedule_[schedule_cursor_].time <= t0 + kTimeEps) {
    const ScheduledArrival& a = schedule_[schedule_cursor_++];
    pending_[a.node_id].push_back(a);
  }
  for (auto& [node_id, queue] : pending_) {
    while (!queue.empty()) {
      if (try_spawn(queue.front(), t0)) {
        queue.pop_front();
      } else {
        // Keep FIFO order at the generator; retry next step.
        ++counters_.blocked_generations;
        emit(fmt::format("{:g} BLOCKED {}", t0, node_id));
        break;
      }
    }
  }
}

bool Simulation::try_spawn(const ScheduledArrival& a, double t0) {
  const VehicleClass& cls = mix_.class_at(a.class_index);
  const Path& path = net_.path(a.path_id);
  const std::size_t link_idx = net_.link_index(path.links.front());
  const int n_strips = net_.strip_counts()[link_idx];
  const int span = occupied_strips(cls.width, net_.strip_width());
  const double len_eff = cls.length + cfg_.length_margin;

  std::vector<int> free_spans;
  for (int lo = 0; lo + span <= n_strips; ++lo)
    if (span_interval_free(link_idx, lo, lo + span - 1, -len_eff, 0.0, -1))
      free_spans.push_back(lo);
  if (free_spans.empty()) return false;

  VehicleState v;
  v.id = next_vehicle_id_++;
  v.class_index = a.class_index;
  v.class_name = cls.name;
  v.length = cls.length;
  v.desired_speed = cls.desired_speed();
  v.max_accel = cls.max_accel;
  v.gipps = {cls.max_accel, cls.desired_braking, cls.expected_leader_braking,
             cfg_.timestep};
  v.span = span;
  v.path_id = a.path_id;
  v.path_pos = 0;
  v.link_idx = link_idx;
  v.position = 0.0;
  v.strip_lo = free_spans[rng_.uniform_index(free_spans.size())];
  v.speed = cfg_.entry_speed_factor * v.desired_speed;
  v.accel = 0.0;
  v.entry_time = t0;
  v.link_entry_time = t0;
  v.history.resize(static_cast<std::size_t>(std::max(1, cfg_.ghr.lag_steps)));

  vehicles_.push_back(std::move(v));
  VehicleState& stored = vehicles_.back();
  members_[link_idx].push_back(stored.id);
  order_[link_idx].push_back(vehicles_.size() - 1);
  stored.order_index = order_[link_idx].size() - 1;
  occupy(stored);
  ++active_count_;
  ++counters_.generated;
  emit(fmt::format("{:g} SPAWN {} {} {} {} {} {} {}", t0, stored.id,
                   stored.class_name, a.node_id, a.path_id,
                   net_.links()[link_idx].id, stored.strip_lo, stored.span));
  return true;
}

void Simulation::inject_pedestrian(std::size_t link_idx, double position,
                                   double lateral, int direction) {
  PedestrianState p;
  p.id = next_pedestrian_id_++;
  p.link_idx = link_idx;
  p.position = position;
  p.lateral = lateral;
  p.direction = direction;
  pedestrians_.push_back(p);
  ++counters_.pedestrians_spawned;
  ped_by_link_[link_idx].push_back(pedestrians_.size() - 1);
}

void Simulation::pedestrian_phase(double t0) {
  const double sw = net_.strip_width();
  // Advance current crossings, retiring the finished ones.
  for (PedestrianState& p : pedestrians_) {
    if (p.done) continue;
    p.lateral += p.direction * cfg_.pedestrian_speed * cfg_.timestep / sw;
    const int n = net_.strip_counts()[p.link_idx];
    if ((p.direction > 0 && p.lateral >= static_cast<double>(n)) ||
        (p.direction < 0 && p.lateral <= 0.0)) {
      p.done = true;
      ++counters_.pedestrians_done;
      emit(fmt::format("{:g} PED_DONE {} {}", t0, p.id,
                       net_.links()[p.link_idx].id));
    }
  }
  std::erase_if(pedestrians_, [](const PedestrianState& p) { return p.done; });

  const double mean = cfg_.pedestrian_rate_hpl * cfg_.timestep / 3600.0;
  for (std::size_t l = 0; l < members_.size(); ++l) {
    const int count = rng_.poisson(mean);
    for (int i = 0; i < count; ++i) {
      PedestrianState p;
      p.id = next_pedestrian_id_++;
      p.link_idx = l;
      p.position = rng_.uniform(0.0, net_.links()[l].length);
      p.direction = rng_.bernoulli(0.5) ? 1 : -1;
      p.lateral = p.direction > 0
                      ? 0.0
                      : static_cast<double>(net_.strip_counts()[l]);
      pedestrians_.push_back(p);
      ++counters_.pedestrians_spawned;
      emit(fmt::format("{:g} PED_SPAWN {} {} {:.3f}", t0, p.id,
                       net_.links()[l].id, p.position));
    }
  }

  for (auto& v : ped_by_link_) v.clear();
  for (std::size_t i = 0; i < pedestrians_.size(); ++i)
    ped_by_link_[pedestrians_[i].link_idx].push_back(i);
}

int Simulation::pedestrian_strip(const PedestrianState& p) const {
  const int n = net_.strip_counts()[p.link_idx];
  const int s = static_cast<int>(std::floor(p.lateral));
  return std::clamp(s, 0, n - 1);
}

Simulation::LeaderInfo Simulation::effective_leader(
    const VehicleState& v) const {
  LeaderInfo best;
  best.rear = kFarAway;
  const double reach = max_vehicle_length_ + cfg_.length_margin;

  const auto& ord = order_[v.link_idx];
  for (std::size_t j = v.order_index; j-- > 0;) {
    const VehicleState& u = vehicles_[ord[j]];
    if (best.rear < kFarAway && u.position - reach >= best.rear) break;
    if (u.strip_lo > v.strip_hi() || u.strip_hi() < v.strip_lo) continue;
    const double rear = u.rear(cfg_.length_margin);
    if (rear < best.rear) {
      best.rear = rear;
      best.speed = u.speed;
      best.real = true;
    }
  }

  for (std::size_t pi : ped_by_link_[v.link_idx]) {
    const PedestrianState& p = pedestrians_[pi];
    const int s = pedestrian_strip(p);
    if (s < v.strip_lo || s > v.strip_hi()) continue;
    if (p.position < v.position) continue;
    const double rear = p.position - cfg_.length_margin;
    if (rear < best.rear) {
      best.rear = rear;
      best.speed = 0.0;
      best.real = true;
    }
  }

  const Path& path = net_.path(v.path_id);
  if (v.path_pos + 1 < path.links.size()) {
    const std::size_t next_idx = net_.link_index(path.links[v.path_pos + 1]);
    const int n_next = net_.strip_counts()[next_idx];
    const int target_lo = std::clamp(v.strip_lo, 0, n_next - v.span);
    const double clearance = entry_clearance(v, next_idx, target_lo);
    const double rear = net_.links()[v.link_idx].length + clearance;
    if (rear < best.rear) {
      best.rear = rear;
      best.speed = 0.0;
      best.real = false;
    }
  }
  return best;
}

double Simulation::entry_clearance(const VehicleState& v,
                                   std::size_t link_idx, int target_lo) const {
  const int target_hi = target_lo + v.span - 1;
  double clearance = net_.links()[link_idx].length;
  const double reach = max_vehicle_length_ + cfg_.length_margin;

  const auto& ord = order_[link_idx];
  for (std::size_t j = ord.size(); j-- > 0;) {
    const VehicleState& u = vehicles_[ord[j]];
    if (u.position - reach >= clearance) break;
    if (u.strip_lo > target_hi || u.strip_hi() < target_lo) continue;
    clearance = std::min(clearance, std::max(0.0, u.rear(cfg_.length_margin)));
  }
  for (std::size_t pi : ped_by_link_[link_idx]) {
    const PedestrianState& p = pedestrians_[pi];
    const int s = pedestrian_strip(p);
    if (s < target_lo || s > target_hi) continue;
    clearance = std::min(
        clearance, std::max(0.0, p.position - cfg_.length_margin));
  }
  return clearance;
}

double Simulation::cf_speed(const VehicleState& v, const LeaderInfo& leader) {
  FollowState st;
  st.position = v.position;
  st.speed = v.speed;
  st.accel = v.max_accel;
  st.desired_speed = v.desired_speed;
  st.leader_position = leader.rear;
  st.leader_speed = leader.speed;
  st.leader_length = 0.0;
  st.timestep = cfg_.timestep;
  switch (cfg_.cf_model) {
    case CarFollowModel::newtonian:
      return newtonian_speed(st);
    case CarFollowModel::gipps:
      return std::clamp(gipps_speed(st, v.gipps, &counters_.cf), 0.0,
                        v.desired_speed);
    case CarFollowModel::hybrid:
      return hybrid_speed(st, v.gipps, &counters_.cf);
  }
  return 0.0;
}

Simulation::SideScan Simulation::scan_side(const VehicleState& v,
                                           int target_lo) const {
  SideScan s;
  const int target_hi = target_lo + v.span - 1;
  const double margin = cfg_.length_margin;
  const double reach = max_vehicle_length_ + margin;
  const double ext_front = v.position + cfg_.lane_change_margin;
  const double ext_rear = v.rear(margin) - cfg_.lane_change_margin;
  const auto& ord = order_[v.link_idx];

  // Ahead: blockers in the extent and the nearest lead vehicle.
  double best_lead_rear = kFarAway;
  for (std::size_t j = v.order_index; j-- > 0;) {
    const VehicleState& u = vehicles_[ord[j]];
    if (u.position - reach >= ext_front && best_lead_rear < kFarAway &&
        u.position - reach >= best_lead_rear)
      break;
    if (u.strip_lo > target_hi || u.strip_hi() < target_lo) continue;
    const double u_rear = u.rear(margin);
    if (u_rear < ext_front) {
      s.free = false;
      return s;
    }
    if (u_rear < best_lead_rear) {
      best_lead_rear = u_rear;
      s.has_lead = true;
      s.lead_rear = u_rear;
      s.lead_speed = u.speed;
    }
  }

  // Behind: blockers in the extent, then the nearest lag vehicle.
  for (std::size_t j = v.order_index + 1; j < ord.size(); ++j) {
    const VehicleState& u = vehicles_[ord[j]];
    if (u.strip_lo > target_hi || u.strip_hi() < target_lo) continue;
    if (u.position > ext_rear) {
      s.free = false;
      return s;
    }
    s.has_lag = true;
    s.lag_vehicle = u.id;
    s.lag_front = u.position;
    s.lag_speed = u.speed;
    break;
  }

  for (std::size_t pi : ped_by_link_[v.link_idx]) {
    const PedestrianState& p = pedestrians_[pi];
    const int strip = pedestrian_strip(p);
    if (strip < target_lo || strip > target_hi) continue;
    if (p.position > ext_rear && p.position < ext_front) {
      s.free = false;
      return s;
    }
    if (p.position >= ext_front) {
      const double rear = p.position - margin;
      if (rear < best_lead_rear) {
        best_lead_rear = rear;
        s.has_lead = true;
        s.lead_rear = rear;
        s.lead_speed = 0.0;
      }
    }
  }
  return s;
}

void Simulation::lane_change_phase() {
  const double tau = cfg_.timestep;
  for (std::size_t l = 0; l < order_.size(); ++l) {
    const int n_strips = net_.strip_counts()[l];
    for (std::size_t oi = 0; oi < order_[l].size(); ++oi) {
      VehicleState& v = vehicles_[order_[l][oi]];
      if (v.retired || v.link_idx != l) continue;

      LaneContext base;
      base.speed = v.speed;
      base.proximity_threshold = cfg_.proximity_factor * v.speed * tau;

      bool wants = false;
      if (cfg_.lc_model == LaneChangeModel::ghr) {
        double dv = 0.0, dx = 0.0;
        if (history_lagged(v, dv, dx)) {
          if (!(dx > 0.0)) {
            ++counters_.lc.singular_ghr;
          } else if (ghr_acceleration(v.speed, dv, dx, cfg_.ghr) < 0.0) {
            wants = true;
          }
        }
      } else {
        const LeaderInfo leader = effective_leader(v);
        base.achievable_speed = cf_speed(v, leader);
        base.leader.present = leader.real;
        base.leader.speed = leader.speed;
        base.leader.gap = leader.rear - v.position;
        wants = desire_to_change(base);
      }
      if (!wants) continue;

      // Left first (toward strip 0), then right; deterministic tie-break.
      for (int dir : {-1, +1}) {
        const int target_lo = v.strip_lo + dir;
        if (target_lo < 0 || target_lo + v.span > n_strips) continue;

        const SideScan side = scan_side(v, target_lo);
        LaneContext ctx = base;
        ctx.target_free = side.free;
        ctx.lead_gap = side.has_lead ? side.lead_rear - v.position : kFarAway;
        ctx.lag_gap =
            side.has_lag ? v.rear(cfg_.length_margin) - side.lag_front : kFarAway;

        ctx.subject_after.position = v.position;
        ctx.subject_after.speed = v.speed;
        ctx.subject_after.accel = v.max_accel;
        ctx.subject_after.desired_speed = v.desired_speed;
        ctx.subject_after.leader_position =
            side.has_lead ? side.lead_rear : kFarAway;
        ctx.subject_after.leader_speed = side.lead_speed;
        ctx.subject_after.leader_length = 0.0;
        ctx.subject_after.timestep = tau;

        ctx.has_follower = side.has_lag;
        if (side.has_lag) {
          const VehicleState& f = vehicles_[static_cast<std::size_t>(
              side.lag_vehicle - 1)];
          ctx.follower_after.position = f.position;
          ctx.follower_after.speed = f.speed;
          ctx.follower_after.accel = f.max_accel;
          ctx.follower_after.desired_speed = f.desired_speed;
          ctx.follower_after.leader_position = v.position;
          ctx.follower_after.leader_length = v.length + cfg_.length_margin;
          ctx.follower_after.leader_speed = v.speed;
          ctx.follower_after.timestep = tau;
          ctx.follower_params = f.gipps;
        }

        LaneDecision decision = LaneDecision::stay;
        switch (cfg_.lc_model) {
          case LaneChangeModel::straightforward:
            decision = straightforward_change(ctx);
            break;
          case LaneChangeModel::gipps:
          case LaneChangeModel::ghr:
            // GHR desire was established above; feasibility and gap
            // acceptance proceed as in the Gipps model.
            decision = gipps_change(ctx, v.gipps, cfg_.gap, rng_,
                                    &counters_.lc);
            break;
        }
        if (decision == LaneDecision::shift) {
          vacate(v);
          v.strip_lo = target_lo;
          occupy(v);
          ++counters_.shifts;
          emit(fmt::format("{:g} SHIFT {} {} {} {}", clock_, v.id,
                           net_.links()[l].id, dir < 0 ? "L" : "R",
                           v.strip_lo));
          break;
        }
      }
    }
  }
}

void Simulation::speed_phase() {
  pending_speed_.assign(vehicles_.size(), 0.0);
  for (const auto& ord : order_) {
    for (std::size_t vi : ord) {
      VehicleState& v = vehicles_[vi];
      if (v.retired) continue;
      const LeaderInfo leader = effective_leader(v);
      pending_speed_[vi] = cf_speed(v, leader);
      push_history(v, leader.speed - v.speed, leader.rear - v.position);
    }
  }
}

void Simulation::advance_phase(double /*t1*/) {
  for (std::size_t l = 0; l < order_.size(); ++l) {
    const double length = net_.links()[l].length;
    for (std::size_t vi : order_[l]) {
      VehicleState& v = vehicles_[vi];
      if (v.retired) continue;
      const double new_speed = pending_speed_[vi];
      const double new_position = v.position + new_speed * cfg_.timestep;
      if (v.position < 0.5 * length && new_position >= 0.5 * length)
        metrics_.record_midpoint(l);
      v.accel = new_speed > v.speed
                    ? v.max_accel
                    : (new_speed - v.speed) / cfg_.timestep;
      v.total_distance += new_speed * cfg_.timestep;
      v.position = new_position;
      v.speed = new_speed;
      if (new_speed < cfg_.wait_speed_threshold) {
        v.link_wait += cfg_.timestep;
        v.total_wait += cfg_.timestep;
      }
    }
  }
}

void Simulation::transfer_phase(double t1) {
  for (std::size_t l = 0; l < members_.size(); ++l) {
    const double length = net_.links()[l].length;
    std::vector<std::size_t> leaving;
    for (int id : members_[l]) {
      const VehicleState& v = vehicles_[static_cast<std::size_t>(id - 1)];
      if (v.link_idx == l && v.position >= length - kTimeEps)
        leaving.push_back(static_cast<std::size_t>(id - 1));
    }
    std::sort(leaving.begin(), leaving.end(),
              [this](std::size_t a, std::size_t b) {
                if (vehicles_[a].position != vehicles_[b].position)
                  return vehicles_[a].position > vehicles_[b].position;
                return vehicles_[a].id < vehicles_[b].id;
              });

    for (std::size_t vi : leaving) {
      VehicleState& v = vehicles_[vi];
      while (!v.retired) {
        const double link_length = net_.links()[v.link_idx].length;
        const double overshoot = v.position - link_length;
        if (overshoot < -kTimeEps) break;

        const Path& path = net_.path(v.path_id);
        // Crossing time can only collapse to zero on a same-step chain
        // through a link shorter than one step of travel.
        const double crossing =
            std::max(t1 - v.link_entry_time, cfg_.timestep);

        if (v.path_pos + 1 == path.links.size()) {
          metrics_.record_crossing(v.link_idx, link_length, crossing);
          metrics_.record_leaver_wait(v.link_idx, v.link_wait);
          v.total_distance -= overshoot;
          retire(v, t1);
          break;
        }

        const std::size_t next_idx =
            net_.link_index(path.links[v.path_pos + 1]);
        const int n_next = net_.strip_counts()[next_idx];
        const double len_eff = v.length + cfg_.length_margin;

        // Candidate spans sorted by lateral distance from the current one.
        const int ideal = std::clamp(v.strip_lo, 0, n_next - v.span);
        int chosen = -1;
        for (int delta = 0; delta < n_next && chosen < 0; ++delta) {
          for (int sign : {-1, +1}) {
            if (delta == 0 && sign > 0) break;
            const int lo = ideal + sign * delta;
            if (lo < 0 || lo + v.span > n_next) continue;
            if (span_interval_free(next_idx, lo, lo + v.span - 1,
                                   overshoot - len_eff, overshoot, v.id)) {
              chosen = lo;
              break;
            }
          }
        }

        if (chosen < 0) {
          v.total_distance -= overshoot;
          v.position = link_length;
          v.speed = 0.0;
          ++counters_.holds;
          break;
        }

        metrics_.record_crossing(v.link_idx, link_length, crossing);
        metrics_.record_leaver_wait(v.link_idx, v.link_wait);
        vacate(v);
        auto& old_members = members_[v.link_idx];
        old_members.erase(
            std::find(old_members.begin(), old_members.end(), v.id));
        const int from_link = net_.links()[v.link_idx].id;
        v.link_idx = next_idx;
        ++v.path_pos;
        v.position = overshoot;
        v.strip_lo = chosen;
        v.link_entry_time = t1;
        v.link_wait = 0.0;
        members_[next_idx].push_back(v.id);
        occupy(v);
        ++counters_.transfers;
        emit(fmt::format("{:g} TRANSFER {} {} {} {:.3f}", t1, v.id, from_link,
                         net_.links()[next_idx].id, v.position));
      }
    }
  }
}

void Simulation::retire(VehicleState& v, double t1) {
  vacate(v);
  auto& mem = members_[v.link_idx];
  mem.erase(std::find(mem.begin(), mem.end(), v.id));
  v.retired = true;
  --active_count_;
  ++counters_.exited;
  metrics_.record_completed({v.id, v.total_distance, t1 - v.entry_time});
  emit(fmt::format("{:g} EXIT {} {:.3f} {:g}", t1, v.id, v.total_distance,
                   t1 - v.entry_time));
}

void Simulation::audit_phase(double t1) {
  if (cfg_.audit_each_step) {
    const auto overlaps = collision_audit();
    counters_.collisions += static_cast<std::int64_t>(overlaps.size());
    for (const OverlapEvent& e : overlaps)
      emit(fmt::format("{:g} COLLISION {} {} {}", t1, e.vehicle_a, e.vehicle_b,
                       e.link_id));
  }
  if (counters_.generated != active_count_ + counters_.exited)
    throw std::logic_error(fmt::format(
        "vehicle conservation broken at t={}: generated {} != active {} + "
        "exited {}",
        t1, counters_.generated, active_count_, counters_.exited));
}

bool Simulation::span_interval_free(std::size_t link_idx, int lo, int hi,
                                    double rear, double front,
                                    int ignore_vehicle) const {
  for (int id : members_[link_idx]) {
    if (id == ignore_vehicle) continue;
    const VehicleState& u = vehicles_[static_cast<std::size_t>(id - 1)];
    if (u.strip_lo > hi || u.strip_hi() < lo) continue;
    if (u.position > rear && u.rear(cfg_.length_margin) < front) return false;
  }
  for (std::size_t pi : ped_by_link_[link_idx]) {
    const PedestrianState& p = pedestrians_[pi];
    const int s = pedestrian_strip(p);
    if (s < lo || s > hi) continue;
    if (p.position > rear && p.position < front) return false;
  }
  return true;
}

void Simulation::occupy(const VehicleState& v) {
  for (int s = v.strip_lo; s <= v.strip_hi(); ++s)
    strips_[v.link_idx][static_cast<std::size_t>(s)].push_back(v.id);
}

void Simulation::vacate(const VehicleState& v) {
  for (int s = v.strip_lo; s <= v.strip_hi(); ++s) {
    auto& ids = strips_[v.link_idx][static_cast<std::size_t>(s)];
    ids.erase(std::find(ids.begin(), ids.end(), v.id));
  }
}

void Simulation::push_history(VehicleState& v, double dv, double dx) {
  const int lag = static_cast<int>(v.history.size());
  v.history[static_cast<std::size_t>(v.history_head)] = {dv, dx};
  v.history_head = (v.history_head + 1) % lag;
  if (v.history_size < lag) ++v.history_size;
}

bool Simulation::history_lagged(const VehicleState& v, double& dv,
                                double& dx) const {
  if (v.history_size < static_cast<int>(v.history.size())) return false;
  const auto& oldest = v.history[static_cast<std::size_t>(v.history_head)];
  dv = oldest.first;
  dx = oldest.second;
  return true;
}

std::vector<OverlapEvent> Simulation::collision_audit() const {
  std::vector<OverlapEvent> events;
  for (std::size_t l = 0; l < members_.size(); ++l) {
    std::vector<std::size_t> sorted;
    sorted.reserve(members_[l].size());
    for (int id : members_[l]) sorted.push_back(static_cast<std::size_t>(id - 1));
    std::sort(sorted.begin(), sorted.end(),
              [this](std::size_t a, std::size_t b) {
                if (vehicles_[a].position != vehicles_[b].position)
                  return vehicles_[a].position > vehicles_[b].position;
                return vehicles_[a].id < vehicles_[b].id;
              });
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      const VehicleState& v = vehicles_[sorted[i]];
      for (std::size_t j = i; j-- > 0;) {
        const VehicleState& u = vehicles_[sorted[j]];
        if (u.position - max_vehicle_length_ >= v.position) break;
        if (u.strip_lo > v.strip_hi() || u.strip_hi() < v.strip_lo) continue;
        // Physical overlap, margins excluded.
        if (u.position - u.length - v.position < -kOverlapTolerance &&
            v.position - v.length - u.position < -kOverlapTolerance)
          events.push_back({u.id, v.id, net_.links()[l].id});
      }
    }
  }
  return events;
}

bool Simulation::occupancy_coherent() const {
  std::vector<std::vector<std::vector<int>>> rebuilt(strips_.size());
  for (std::size_t l = 0; l < strips_.size(); ++l)
    rebuilt[l].resize(strips_[l].size());
  for (const VehicleState& v : vehicles_) {
    if (v.retired) continue;
    for (int s = v.strip_lo; s <= v.strip_hi(); ++s)
      rebuilt[v.link_idx][static_cast<std::size_t>(s)].push_back(v.id);
  }
  for (std::size_t l = 0; l < strips_.size(); ++l) {
    for (std::size_t s = 0; s < strips_[l].size(); ++s) {
      std::vector<int> a = strips_[l][s];
      std::vector<int> b = rebuilt[l][s];
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      if (a != b) return false;
    }
  }
  return true;
}

MetricsReport Simulation::report(double horizon) const {
  std::vector<int> ids;
  ids.reserve(net_.links().size());
  for (const Link& l : net_.links()) ids.push_back(l.id);
  return metrics_.report(ids, horizon, cfg_.include_unfinished_vehicles);
}

const VehicleState* Simulation::find_vehicle(int id) const {
  if (id < 1 || static_cast<std::size_t>(id) > vehicles_.size()) return nullptr;
  return &vehicles_[static_cast<std::size_t>(id - 1)];
}

std::span<const int> Simulation::strip_ids(std::size_t link_idx,
                                           int strip) const {
  return strips_[link_idx][static_cast<std::size_t>(strip)];
}

}  // namespace roadbird
