#pragma once

// Simulated WiFi-Direct style device-to-device layer: group formation with
// owner/member roles, a distance-dependent lossy link, a deterministic
// message queue, and GO-side forwarding that gives late pedestrians a view of
// the vehicles already in the group.

#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "safercross/geo.hpp"

namespace safercross::p2p {

using DeviceId = std::string;

enum class DeviceKind { Pedestrian, Vehicle };
enum class FormationMode { Autonomous, Negotiated };

std::string_view to_string(FormationMode m);

struct Group {
  DeviceId owner;
  DeviceKind owner_kind = DeviceKind::Pedestrian;
  std::set<DeviceId> members;
  std::string channel;
  double formed_at = 0.0;  // time the group becomes usable
};

struct ReqMsg {
  DeviceId sender;
  std::size_t crossing = 0;  // index of the crossing the sender approaches
  double timestamp = 0.0;

  friend bool operator==(const ReqMsg&, const ReqMsg&) = default;
};

// Vehicle reply: exactly what the risk estimate needs.
struct RepMsg {
  DeviceId vehicle_id;
  double v_c = 0.0;   // m/s
  double m_v = 0.0;   // kg
  double a_v = 0.0;   // m^2
  double t_c = 0.0;   // s to the crossing
  double timestamp = 0.0;

  friend bool operator==(const RepMsg&, const RepMsg&) = default;
};

// A REP relayed by the group owner, with the owner's measured t_delay.
struct ForwardedRep {
  RepMsg rep;
  DeviceId via;
  double t_delay = 0.0;

  friend bool operator==(const ForwardedRep&, const ForwardedRep&) = default;
};

using Payload = std::variant<ReqMsg, RepMsg, ForwardedRep>;

struct LinkModel {
  double pdr_near = 0.9;        // delivery probability up to pdr_range
  double pdr_range = 60.0;      // m
  double pdr_far_slope = 0.03;  // probability lost per meter beyond pdr_range
  double delay_mean = 0.03;     // mean round-trip delay, s
  double delay_jitter = 0.005;  // one-way delay half-width, s

  void validate() const;
  double pdr(double distance) const;
  // Distance beyond which nothing is delivered.
  double cutoff() const;
};

struct FormationParams {
  double autonomous_mean = 2.8;
  double autonomous_std = 0.3;
  double negotiated_min = 8.0;
  double negotiated_max = 9.0;
};

struct Formation {
  Group group;
  double delay = 0.0;
};

double sample_formation_delay(FormationMode mode, const FormationParams& params,
                              std::mt19937_64& rng);

struct Delivery {
  bool delivered = false;
  double delay = 0.0;  // one-way, seconds; 0 when dropped
};

// Draws exactly two variates per call, so drop/deliver sequences stay
// aligned across runs with the same seed.
Delivery deliver(const geo::GeoPoint& from, const geo::GeoPoint& to, const LinkModel& lm,
                 std::mt19937_64& rng);

// Mean of observed round trips. Throws Error(NoSamples).
double measure_t_delay(std::span<const double> round_trips);

struct ForwardingRoute {
  DeviceId owner;
  DeviceId member;
  std::string channel;

  friend bool operator==(const ForwardingRoute&, const ForwardingRoute&) = default;
};

class GroupRegistry {
 public:
  explicit GroupRegistry(FormationParams params = {}) : params_(params) {}

  // Throws Error(AlreadyOwner) when `owner` already owns a group, and
  // Error(InvalidArgument) when another group occupies the channel.
  Formation form_group(const DeviceId& owner, DeviceKind kind, const std::string& channel,
                       FormationMode mode, double now, std::mt19937_64& rng);

  // Throws Error(NoGroupFound) / Error(AlreadyMember).
  void join_group(const DeviceId& device, const std::string& channel);

  // A pedestrian that is not an owner joins the pedestrian-owned group on the
  // channel as a member, and the owner starts relaying REPs to it.
  // Throws Error(NoGroupFound) when no such group exists.
  ForwardingRoute overhear_and_join(const DeviceId& pedestrian, const std::string& channel);

  // Removes the device. An owner leaving dissolves the group; the former
  // members are returned so they can rediscover.
  std::vector<DeviceId> leave(const DeviceId& device);

  const Group* group_on(const std::string& channel) const;
  const Group* group_of(const DeviceId& device) const;
  bool is_owner(const DeviceId& device) const;
  std::vector<ForwardingRoute> routes_from(const DeviceId& owner) const;

 private:
  FormationParams params_;
  std::map<std::string, Group> groups_;  // by channel
  std::vector<ForwardingRoute> routes_;
};

struct Envelope {
  double deliver_at = 0.0;
  std::uint64_t seq = 0;
  double sent_at = 0.0;
  DeviceId from;
  DeviceId to;
  Payload payload;
};

// Deterministic in-flight message queue ordered by delivery time, then by
// posting order.
class MessageBus {
 public:
  std::uint64_t post(double sent_at, double deliver_at, DeviceId from, DeviceId to, Payload payload);
  // Every envelope with deliver_at <= now, in order.
  std::vector<Envelope> pop_due(double now);
  std::size_t pending() const { return queue_.size(); }

 private:
  struct Later {
    bool operator()(const Envelope& a, const Envelope& b) const {
      if (a.deliver_at != b.deliver_at) return a.deliver_at > b.deliver_at;
      return a.seq > b.seq;
    }
  };
  std::priority_queue<Envelope, std::vector<Envelope>, Later> queue_;
  std::uint64_t next_seq_ = 0;
};

}  // namespace safercross::p2p
