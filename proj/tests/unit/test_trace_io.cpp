#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "deal/errors.hpp"
#include "deal/rng.hpp"
#include "deal/trace_io.hpp"
#include "test_objectives.hpp"

using namespace deal;

namespace {

IterateTrace sample_trace() {
  IterateTrace t;
  t.seed = 17;
  t.config_digest = "abc";
  t.solver_id = "deal-a";
  t.rho = 0.125;
  t.theta = 3.0;
  t.displacement_c = 1.0;
  t.heuristic = true;
  t.termination = "tolerance";
  t.fallbacks = 2;
  t.params = {{"alpha_bar", 1.0}, {"p_bar", 19.35}};
  Rng rng(4);
  for (int k = 0; k < 5; ++k) {
    IterateRecord r;
    r.k = k;
    r.f = rng.normal();
    r.grad_norm = std::abs(rng.normal()) / 3.0;
    r.step = 0.1 * k;
    r.inner_count = k % 3;
    if (k < 4) r.displacement = std::abs(rng.normal()) * 1e-7;
    r.x = rng.normal_vector(3);
    t.records.push_back(r);
  }
  return t;
}

}  // namespace

TEST(FormatDouble, RoundTripsExactly) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal() * std::pow(10.0, rng.uniform(-300, 300));
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "nan");
}

TEST(TraceCsv, HeaderAndColumnOrder) {
  std::ostringstream out;
  write_trace_csv(out, deal::testing::trace_of({{1.5, 2.0}, {0.5, 0.0}}));
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "k,f,grad_norm,step,inner_count,displacement");
  std::getline(in, line);
  EXPECT_EQ(line, "0,1.5,2,0,0,");
}

TEST(TraceCsv, RoundTrip) {
  const auto t = sample_trace();
  std::ostringstream out;
  write_trace_csv(out, t);
  std::istringstream in(out.str());
  const auto back = read_trace_csv(in);
  ASSERT_EQ(back.size(), t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_EQ(back.records[i].k, t.records[i].k);
    EXPECT_EQ(back.records[i].f, t.records[i].f);
    EXPECT_EQ(back.records[i].grad_norm, t.records[i].grad_norm);
    EXPECT_EQ(back.records[i].step, t.records[i].step);
    EXPECT_EQ(back.records[i].inner_count, t.records[i].inner_count);
    EXPECT_EQ(back.records[i].displacement, t.records[i].displacement);
  }
}

TEST(TraceCsv, RejectsMalformedInput) {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return read_trace_csv(in);
  };
  EXPECT_THROW(parse("a,b\n"), DataError);
  EXPECT_THROW(parse(std::string(kTraceCsvHeader) + "\n0,1,2\n"), DataError);
  EXPECT_THROW(parse(std::string(kTraceCsvHeader) + "\n0,x,2,0,0,\n"), DataError);
  EXPECT_THROW(parse(std::string(kTraceCsvHeader) + "\n1,1,1,0,0,1\n1,0,0,0,0,\n"), DataError);
  EXPECT_NO_THROW(parse(std::string(kTraceCsvHeader) + "\n"));
}

TEST(TraceSidecar, RoundTrip) {
  const auto t = sample_trace();
  IterateTrace back;
  apply_trace_sidecar(back, trace_sidecar_json(t));
  EXPECT_EQ(back.seed, t.seed);
  EXPECT_EQ(back.config_digest, t.config_digest);
  EXPECT_EQ(back.solver_id, t.solver_id);
  EXPECT_EQ(back.rho, t.rho);
  EXPECT_EQ(back.theta, t.theta);
  EXPECT_EQ(back.displacement_c, t.displacement_c);
  EXPECT_EQ(back.heuristic, t.heuristic);
  EXPECT_EQ(back.termination, t.termination);
  EXPECT_EQ(back.fallbacks, t.fallbacks);
  EXPECT_EQ(back.params, t.params);
}

TEST(TraceSidecar, MalformedJsonIsDataError) {
  IterateTrace t;
  EXPECT_THROW(apply_trace_sidecar(t, "{not json"), DataError);
  EXPECT_THROW(apply_trace_sidecar(t, R"({"theta": 2})"), DataError);
}

TEST(TraceFiles, SaveLoadWithIterates) {
  const auto dir = std::filesystem::temp_directory_path() / "deal_trace_io_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "run.r0.csv";
  const auto t = sample_trace();
  save_trace(path, t);
  EXPECT_TRUE(std::filesystem::exists(dir / "run.r0.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "run.r0.iterates.csv"));
  const auto back = load_trace(path);
  ASSERT_EQ(back.size(), t.size());
  EXPECT_EQ(back.rho, t.rho);
  for (std::size_t i = 0; i < t.size(); ++i) {
    ASSERT_TRUE(back.records[i].x.has_value());
    EXPECT_EQ(*back.records[i].x, *t.records[i].x);
  }
  std::filesystem::remove_all(dir);
}

TEST(TraceFiles, MissingFileIsDataError) {
  EXPECT_THROW(load_trace("/nonexistent/deal/trace.csv"), DataError);
}

TEST(IteratesCsv, UnknownIndexIsDataError) {
  auto t = deal::testing::trace_of({{1.0, 1.0}});
  std::istringstream in("k,x0\n5,1.0\n");
  EXPECT_THROW(read_iterates_csv(in, t), DataError);
}
