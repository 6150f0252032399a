#include <doctest.h>

#include <string>

#include "mired/checkpoint.hpp"
#include "mired/error.hpp"
#include "mired/textio.hpp"
#include "support.hpp"

namespace {

mired::Checkpoint sample() {
  const std::size_t dims[] = {5, 4, 2};
  mired::Checkpoint c;
  c.model = mired::init_model(mired::encoder_topology(dims, mired::Activation::tanh), 3, 42);
  c.model.head.bias = {0.1, -1.0 / 3.0, 1e-300};
  c.class_names = {"Benign", "DoS-Hulk", "Bot"};
  c.meta = {{"objective", "mtls_red"}, {"beta", "2"}};
  c.standardizer = mired::fit_standardizer(testing::random_matrix(10, 5, 1));
  return c;
}

void expect_io_error(const std::string& text, const std::string& needle) {
  try {
    mired::checkpoint_from_text(text);
    FAIL("expected IoError for " << needle);
  } catch (const mired::IoError& e) {
    INFO(e.what());
    CHECK(std::string(e.what()).find(needle) != std::string::npos);
  }
}

}  // namespace

TEST_SUITE("checkpoint") {
  TEST_CASE("round trip is exact") {
    const auto c = sample();
    const std::string text = mired::checkpoint_to_text(c);
    const auto back = mired::checkpoint_from_text(text);
    CHECK(back.model == c.model);
    CHECK(back.class_names == c.class_names);
    CHECK(back.meta == c.meta);
    CHECK(back.standardizer == c.standardizer);
    CHECK(*back.meta_value("beta") == "2");
    CHECK(back.meta_value("none") == nullptr);
    CHECK(mired::checkpoint_to_text(back) == text);

    const auto dir = testing::temp_dir("ckpt");
    mired::save_checkpoint(c, dir / "m.ckpt");
    CHECK(mired::load_checkpoint(dir / "m.ckpt").model == c.model);
  }

  TEST_CASE("corrupt files are rejected") {
    const std::string good = mired::checkpoint_to_text(sample());
    expect_io_error("", "MIREDCKPT");
    expect_io_error("NOTACKPT\n" + good.substr(good.find('\n') + 1), "MIREDCKPT");
    std::string v = good;
    v.replace(v.find("version 1"), 9, "version 9");
    expect_io_error(v, "version");
    expect_io_error(good.substr(0, good.size() / 2), "line");
    std::string nan = good;
    const auto w = nan.find("\nw ");
    nan.replace(w + 3, 1, "nan ");
    expect_io_error(nan, "line");
    CHECK_THROWS_AS(mired::load_checkpoint("/nonexistent/model.ckpt"), mired::IoError);
  }
}
