#include <doctest.h>

#include <cmath>

#include "safercross/error.hpp"
#include "safercross/p2p.hpp"

using namespace safercross;
using namespace safercross::p2p;
using safercross::geo::GeoPoint;

namespace {

const GeoPoint kOrigin{40.0, -83.0};
GeoPoint At(double east, double north) { return geo::offset(kOrigin, east, north); }

ErrorCode CodeOf(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::RuntimeError;
}

}  // namespace

TEST_CASE("formation delays") {
  std::mt19937_64 rng(4);
  const FormationParams fp;
  double sum = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double d = sample_formation_delay(FormationMode::Autonomous, fp, rng);
    CHECK(d >= 0.0);
    CHECK(d <= 2.8 + 4 * 0.3);
    sum += d;
  }
  CHECK(std::fabs(sum / 1000 - 2.8) <= 0.1);
  for (int i = 0; i < 1000; ++i) {
    const double d = sample_formation_delay(FormationMode::Negotiated, fp, rng);
    CHECK(d >= 8.0);
    CHECK(d <= 9.0);
  }
}

TEST_CASE("group membership") {
  GroupRegistry reg;
  std::mt19937_64 rng(1);
  const auto f = reg.form_group("ped_a", DeviceKind::Pedestrian, "ch", FormationMode::Autonomous, 10.0, rng);
  CHECK(f.group.formed_at == doctest::Approx(10.0 + f.delay));
  CHECK(CodeOf([&] { reg.form_group("ped_a", DeviceKind::Pedestrian, "ch2", FormationMode::Autonomous, 11, rng); }) ==
        ErrorCode::AlreadyOwner);
  CHECK(CodeOf([&] { reg.form_group("ped_c", DeviceKind::Pedestrian, "ch", FormationMode::Autonomous, 11, rng); }) ==
        ErrorCode::InvalidArgument);

  reg.join_group("car_a", "ch");
  CHECK(reg.group_on("ch")->members.size() == 1);
  CHECK(CodeOf([&] { reg.join_group("car_a", "ch"); }) == ErrorCode::AlreadyMember);
  CHECK(CodeOf([&] { reg.join_group("car_b", "nothing"); }) == ErrorCode::NoGroupFound);

  const auto route = reg.overhear_and_join("ped_b", "ch");
  CHECK(route == ForwardingRoute{"ped_a", "ped_b", "ch"});
  CHECK(reg.group_on("ch")->members.count("ped_b") == 1);
  CHECK(reg.routes_from("ped_a").size() == 1);
  CHECK(CodeOf([&] { reg.overhear_and_join("ped_c", "empty"); }) == ErrorCode::NoGroupFound);

  CHECK(reg.is_owner("ped_a"));
  CHECK(reg.group_of("car_a") == reg.group_on("ch"));
  auto orphans = reg.leave("ped_a");
  std::sort(orphans.begin(), orphans.end());
  CHECK(orphans == std::vector<DeviceId>{"car_a", "ped_b"});
  CHECK(reg.group_on("ch") == nullptr);
  CHECK(reg.routes_from("ped_a").empty());
  CHECK(reg.group_of("car_a") == nullptr);
}

TEST_CASE("overhearing requires a pedestrian-owned group") {
  GroupRegistry reg;
  std::mt19937_64 rng(1);
  reg.form_group("car", DeviceKind::Vehicle, "ch", FormationMode::Autonomous, 0.0, rng);
  CHECK(CodeOf([&] { reg.overhear_and_join("ped", "ch"); }) == ErrorCode::NoGroupFound);
}

TEST_CASE("link model") {
  const LinkModel lm;
  CHECK(lm.pdr(0) == 0.9);
  CHECK(lm.pdr(60) == 0.9);
  CHECK(lm.pdr(70) == doctest::Approx(0.6));
  CHECK(lm.pdr(500) == 0.0);
  CHECK(lm.cutoff() == doctest::Approx(90.0));

  std::mt19937_64 rng(12);
  int ok = 0;
  for (int i = 0; i < 10000; ++i) ok += deliver(At(0, 0), At(30, 0), lm, rng).delivered;
  CHECK(std::fabs(ok / 10000.0 - 0.9) <= 0.02);
  for (int i = 0; i < 1000; ++i) CHECK_FALSE(deliver(At(0, 0), At(200, 0), lm, rng).delivered);

  LinkModel perfect = lm;
  perfect.pdr_near = 1.0;
  perfect.delay_jitter = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto d = deliver(At(0, 0), At(10, 0), perfect, rng);
    CHECK(d.delivered);
    CHECK(d.delay == doctest::Approx(perfect.delay_mean / 2));
  }
}

TEST_CASE("deliver consumes a fixed number of variates") {
  const LinkModel lm;
  std::mt19937_64 a(77), b(77);
  deliver(At(0, 0), At(10, 0), lm, a);    // likely delivered
  deliver(At(0, 0), At(500, 0), lm, b);   // always dropped
  CHECK(a() == b());
}

TEST_CASE("round-trip delay") {
  CHECK(measure_t_delay(std::vector<double>{0.02, 0.04}) == doctest::Approx(0.03));
  CHECK(measure_t_delay(std::vector<double>{0.05}) == 0.05);
  CHECK_THROWS_AS(measure_t_delay(std::vector<double>{}), Error);
}

TEST_CASE("message bus orders by delivery time then posting order") {
  MessageBus bus;
  bus.post(0.0, 0.5, "a", "b", ReqMsg{"a", 0, 0.0});
  bus.post(0.0, 0.2, "a", "c", ReqMsg{"a", 0, 0.0});
  bus.post(0.1, 0.2, "a", "d", ReqMsg{"a", 0, 0.1});
  CHECK(bus.pop_due(0.1).empty());
  const auto due = bus.pop_due(0.2);
  REQUIRE(due.size() == 2);
  CHECK(due[0].to == "c");
  CHECK(due[1].to == "d");
  CHECK(bus.pending() == 1);
}
