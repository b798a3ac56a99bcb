#include <doctest.h>

#include <set>

#include "manyshot/comet_client.hpp"

using namespace manyshot;

namespace {

std::vector<CometRequest> make_requests(std::size_t n) {
  std::vector<CometRequest> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({static_cast<long long>(1000 + 7 * i), "src " + std::to_string(i),
                   std::string(1 + i % 9, 'm'), std::string(1 + i % 5, 'r')});
  }
  return out;
}

CometErrc spawn_error(std::vector<std::string> argv) {
  try {
    CometSidecar s(std::move(argv));
  } catch (const CometError& e) {
    return e.code();
  }
  FAIL("expected the sidecar to fail");
  return CometErrc::spawn_failed;
}

}  // namespace

TEST_CASE("handshake and batches of various sizes") {
  CometSidecar sidecar({COMET_STUB});
  CHECK(sidecar.model() == "stub-length-ratio");
  CHECK(sidecar.pid() > 0);
  CHECK(sidecar.score_batch({}).empty());
  for (std::size_t n : {1u, 10u, 100u, 5000u}) {
    const auto reqs = make_requests(n);
    const auto resp = sidecar.score_batch(reqs);
    REQUIRE(resp.size() == n);
    std::set<long long> ids;
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(resp[i].id == reqs[i].id);
      ids.insert(resp[i].id);
      REQUIRE(resp[i].score.has_value());
      const double a = reqs[i].mt.size(), b = reqs[i].ref.size();
      CHECK(*resp[i].score == doctest::Approx(std::min(a, b) / std::max(a, b)));
    }
    CHECK(ids.size() == n);
  }
  CHECK(sidecar.close() == 0);
}

TEST_CASE("in-band errors are per item") {
  CometSidecar sidecar({COMET_STUB});
  const auto resp = sidecar.score_batch({{1, "s", "", "r"}, {2, "s", "mt", "rr"}});
  REQUIRE(resp.size() == 2);
  CHECK(resp[0].error == std::optional<std::string>{"empty hypothesis"});
  CHECK_FALSE(resp[0].score.has_value());
  CHECK(resp[1].score == std::optional<double>{1.0});
}

TEST_CASE("a sidecar dying mid-batch raises SidecarCrashed without partial results") {
  CometSidecar sidecar({COMET_STUB, "--crash-after", "4"});
  try {
    sidecar.score_batch(make_requests(10));
    FAIL("expected SidecarCrashed");
  } catch (const CometError& e) {
    CHECK(e.code() == CometErrc::sidecar_crashed);
  }
  CHECK_THROWS_AS(sidecar.score_batch(make_requests(1)), CometError);
  sidecar.close();
}

TEST_CASE("an out-of-order id is a protocol violation") {
  CometSidecar sidecar({COMET_STUB, "--wrong-id"});
  try {
    sidecar.score_batch(make_requests(3));
    FAIL("expected ProtocolViolation");
  } catch (const CometError& e) {
    CHECK(e.code() == CometErrc::protocol_violation);
  }
}

TEST_CASE("handshake failures") {
  CHECK(spawn_error({COMET_STUB, "--load-error"}) == CometErrc::handshake_failed);
  CHECK(spawn_error({COMET_STUB, "--silent"}) == CometErrc::handshake_failed);
  CHECK(spawn_error({COMET_STUB, "--protocol", "2"}) == CometErrc::handshake_failed);
  const auto missing = spawn_error({"/nonexistent/comet-sidecar"});
  CHECK((missing == CometErrc::spawn_failed || missing == CometErrc::handshake_failed));
  CHECK(spawn_error({}) == CometErrc::spawn_failed);
}
