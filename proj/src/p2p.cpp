#include "safercross/p2p.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "safercross/error.hpp"

namespace safercross::p2p {

std::string_view to_string(FormationMode m) {
  return m == FormationMode::Autonomous ? "autonomous" : "negotiated";
}

void LinkModel::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(pdr_near)) throw Error(ErrorCode::InvalidArgument, "pdr_near must be in [0, 1]");
  if (pdr_range < 0.0) throw Error(ErrorCode::InvalidArgument, "pdr_range must be >= 0");
  if (!(pdr_far_slope > 0.0)) throw Error(ErrorCode::InvalidArgument, "pdr_far_slope must be > 0");
  if (delay_mean < 0.0 || delay_jitter < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "delays must be >= 0");
  }
}

double LinkModel::pdr(double distance) const {
  if (distance <= pdr_range) return pdr_near;
  return std::max(0.0, pdr_near - pdr_far_slope * (distance - pdr_range));
}

double LinkModel::cutoff() const { return pdr_range + pdr_near / pdr_far_slope; }

double sample_formation_delay(FormationMode mode, const FormationParams& params,
                              std::mt19937_64& rng) {
  if (mode == FormationMode::Autonomous) {
    std::normal_distribution<double> d(params.autonomous_mean, params.autonomous_std);
    return std::max(0.0, d(rng));
  }
  std::uniform_real_distribution<double> d(params.negotiated_min, params.negotiated_max);
  return d(rng);
}

Delivery deliver(const geo::GeoPoint& from, const geo::GeoPoint& to, const LinkModel& lm,
                 std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double draw = unit(rng);
  const double jitter = unit(rng);
  const double p = lm.pdr(geo::geodetic_distance(from, to));
  if (!(draw < p)) return {false, 0.0};
  const double one_way = lm.delay_mean / 2.0 + lm.delay_jitter * (2.0 * jitter - 1.0);
  return {true, std::max(0.0, one_way)};
}

double measure_t_delay(std::span<const double> round_trips) {
  if (round_trips.empty()) throw Error(ErrorCode::NoSamples, "no completed round trips");
  return std::accumulate(round_trips.begin(), round_trips.end(), 0.0) /
         static_cast<double>(round_trips.size());
}

Formation GroupRegistry::form_group(const DeviceId& owner, DeviceKind kind,
                                    const std::string& channel, FormationMode mode, double now,
                                    std::mt19937_64& rng) {
  if (is_owner(owner)) throw Error(ErrorCode::AlreadyOwner, owner + " already owns a group");
  if (groups_.count(channel) != 0) {
    throw Error(ErrorCode::InvalidArgument, "channel " + channel + " already has a group");
  }
  const double delay = sample_formation_delay(mode, params_, rng);
  Group g{owner, kind, {}, channel, now + delay};
  groups_.emplace(channel, g);
  return {g, delay};
}

void GroupRegistry::join_group(const DeviceId& device, const std::string& channel) {
  auto it = groups_.find(channel);
  if (it == groups_.end()) throw Error(ErrorCode::NoGroupFound, "no group on channel " + channel);
  Group& g = it->second;
  if (g.owner == device || g.members.count(device) != 0) {
    throw Error(ErrorCode::AlreadyMember, device + " is already in the group on " + channel);
  }
  g.members.insert(device);
}

ForwardingRoute GroupRegistry::overhear_and_join(const DeviceId& pedestrian,
                                                 const std::string& channel) {
  auto it = groups_.find(channel);
  if (it == groups_.end() || it->second.owner_kind != DeviceKind::Pedestrian) {
    throw Error(ErrorCode::NoGroupFound, "no pedestrian-owned group on channel " + channel);
  }
  join_group(pedestrian, channel);
  ForwardingRoute route{it->second.owner, pedestrian, channel};
  routes_.push_back(route);
  return route;
}

std::vector<DeviceId> GroupRegistry::leave(const DeviceId& device) {
  for (auto it = groups_.begin(); it != groups_.end(); ++it) {
    Group& g = it->second;
    if (g.owner == device) {
      std::vector<DeviceId> orphans(g.members.begin(), g.members.end());
      std::erase_if(routes_, [&](const ForwardingRoute& r) { return r.owner == device; });
      groups_.erase(it);
      return orphans;
    }
    if (g.members.erase(device) != 0) {
      std::erase_if(routes_, [&](const ForwardingRoute& r) { return r.member == device; });
      return {};
    }
  }
  return {};
}

const Group* GroupRegistry::group_on(const std::string& channel) const {
  auto it = groups_.find(channel);
  return it == groups_.end() ? nullptr : &it->second;
}

const Group* GroupRegistry::group_of(const DeviceId& device) const {
  for (const auto& [_, g] : groups_) {
    if (g.owner == device || g.members.count(device) != 0) return &g;
  }
  return nullptr;
}

bool GroupRegistry::is_owner(const DeviceId& device) const {
  return std::any_of(groups_.begin(), groups_.end(),
                     [&](const auto& kv) { return kv.second.owner == device; });
}

std::vector<ForwardingRoute> GroupRegistry::routes_from(const DeviceId& owner) const {
  std::vector<ForwardingRoute> out;
  for (const auto& r : routes_) {
    if (r.owner == owner) out.push_back(r);
  }
  return out;
}

std::uint64_t MessageBus::post(double sent_at, double deliver_at, DeviceId from, DeviceId to,
                               Payload payload) {
  const std::uint64_t seq = next_seq_++;
  queue_.push(Envelope{deliver_at, seq, sent_at, std::move(from), std::move(to), std::move(payload)});
  return seq;
}

std::vector<Envelope> MessageBus::pop_due(double now) {
  std::vector<Envelope> out;
  while (!queue_.empty() && queue_.top().deliver_at <= now) {
    out.push_back(queue_.top());
    queue_.pop();
  }
  return out;
}

}  // namespace safercross::p2p
