#include "test_util.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <string>
#include <vector>

using namespace proxblock;
using testutil::TempDir;

namespace {

bool bit_equal(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) {
      double x = a(i, j), y = b(i, j);
      if (std::memcmp(&x, &y, sizeof x) != 0) return false;
    }
  return true;
}

}  // namespace

TEST_CASE("KvConfig parses comments, blanks, and CRLF; later keys win") {
  KvConfig cfg = KvConfig::parse(
      "# a comment\n"
      "\n"
      "bands = 8\r\n"
      "  noise_sigma=0.25  \n"
      "bands=16\n");
  REQUIRE(cfg.get_index("bands") == 16);
  REQUIRE(cfg.get_double("noise_sigma") == 0.25);
  REQUIRE(cfg.entries().size() == 2);  // the override replaced in place
  REQUIRE(cfg.entries()[0].first == "bands");

  try {
    KvConfig::parse("ok=1\nnot a pair\n", "run.cfg");
    FAIL("expected a parse error");
  } catch (const InputError& e) {
    REQUIRE(std::string(e.what()).find("run.cfg:2") != std::string::npos);
  }
  REQUIRE_THROWS_AS(KvConfig::parse("=value\n"), InputError);
}

TEST_CASE("KvConfig loads files and applies command-line overrides") {
  TempDir dir("cfg");
  atomic_write_file(dir.str("run.cfg"), "seed=3\nout=scene.pbm\n");
  KvConfig cfg = KvConfig::load_file(dir.str("run.cfg"));
  REQUIRE(cfg.get_u64("seed", 0) == 3);

  cfg.apply_override("seed=11");
  cfg.apply_override(" width = 7 ");
  REQUIRE(cfg.get_u64("seed", 0) == 11);
  REQUIRE(cfg.get_index("width") == 7);
  REQUIRE_THROWS_AS(cfg.apply_override("no-equals-sign"), InputError);
  REQUIRE_THROWS_AS(cfg.apply_override("=5"), InputError);
  REQUIRE_THROWS_AS(KvConfig::load_file(dir.str("absent.cfg")), InputError);
}

TEST_CASE("KvConfig typed getters validate their values") {
  KvConfig cfg = KvConfig::parse(
      "d=2.5\nn=-3\nu=42\nflag_t=yes\nflag_f=0\nlist=1, 4,9\nempty=\nword=abc\n");
  REQUIRE(cfg.get_double("d") == 2.5);
  REQUIRE(cfg.get_index("n") == -3);
  REQUIRE(cfg.get_u64("u", 0) == 42);
  REQUIRE(cfg.get_bool("flag_t", false));
  REQUIRE_FALSE(cfg.get_bool("flag_f", true));
  REQUIRE(cfg.get_bool("missing", true));
  REQUIRE(cfg.get_index_list("list") == std::vector<Index>{1, 4, 9});
  REQUIRE(cfg.get_index_list("empty").empty());
  REQUIRE(cfg.get_index_list("missing").empty());
  REQUIRE(cfg.get_string("missing", "dflt") == "dflt");
  REQUIRE(cfg.get_double("missing", 1.5) == 1.5);

  REQUIRE_THROWS_AS(cfg.get_string("missing"), InputError);
  REQUIRE_THROWS_AS(cfg.get_double("word"), InputError);
  REQUIRE_THROWS_AS(cfg.get_index("d"), InputError);
  REQUIRE_THROWS_AS(cfg.get_u64("n", 0), InputError);
  REQUIRE_THROWS_AS(cfg.get_bool("word", false), InputError);
  REQUIRE_THROWS_AS(cfg.get_index_list("word"), InputError);
}

TEST_CASE("KvConfig rejects unknown keys but tolerates manifest echo keys") {
  KvConfig cfg = KvConfig::parse(
      "command=unmix\nseed=1\nresult.status=feasible\nstop.max_iter=50\n");
  REQUIRE_NOTHROW(cfg.check_known({"seed"}, {"stop."}));
  REQUIRE_THROWS_WITH(cfg.check_known({"other"}, {"stop."}),
                      Catch::Matchers::ContainsSubstring("unknown config key 'seed'"));
  REQUIRE_THROWS_AS(cfg.check_known({"seed"}), InputError);  // stop.max_iter now unknown
}

TEST_CASE("Rng streams are reproducible and stay in range") {
  Rng a(123), b(123), c(124);
  bool any_diff = false;
  for (int i = 0; i < 1000; ++i) {
    double x = a.uniform();
    REQUIRE(x == b.uniform());
    if (x != c.uniform()) any_diff = true;
    REQUIRE(x >= 0.0);
    REQUIRE(x < 1.0);
  }
  REQUIRE(any_diff);
  REQUIRE(a.normal() == b.normal());
  REQUIRE(a.uniform(2.0, 3.0) == b.uniform(2.0, 3.0));
  for (int i = 0; i < 100; ++i) {
    Index k = a.uniform_index(7);
    REQUIRE(k == b.uniform_index(7));
    REQUIRE(k >= 0);
    REQUIRE(k < 7);
  }
  REQUIRE(bit_equal(a.matrix(3, 4, -1.0, 1.0), b.matrix(3, 4, -1.0, 1.0)));
  REQUIRE_THROWS_AS(a.uniform_index(0), InputError);
  REQUIRE(std::string(Rng::kName).find("mt19937_64") != std::string::npos);
}

TEST_CASE("gen_scene is deterministic and exactly factorizable without noise") {
  SceneSpec spec;
  spec.bands = 6;
  spec.height = 5;
  spec.width = 4;
  spec.components = 3;
  spec.background_level = 0.1;
  spec.seed = 9;

  Scene s1 = gen_scene(spec);
  Scene s2 = gen_scene(spec);
  REQUIRE(bit_equal(s1.D, s2.D));
  REQUIRE(bit_equal(s1.A_true, s2.A_true));
  REQUIRE(bit_equal(s1.S_true, s2.S_true));

  REQUIRE(s1.D.rows() == 6);
  REQUIRE(s1.D.cols() == 20);
  REQUIRE(s1.A_true.rows() == 6);
  REQUIRE(s1.A_true.cols() == 3);
  REQUIRE(s1.S_true.rows() == 3);
  REQUIRE(s1.S_true.cols() == 20);
  REQUIRE(s1.background.size() == 6);

  // noiseless: D is exactly A S plus the per-band pedestal
  Matrix expected = s1.A_true * s1.S_true;
  expected.colwise() += s1.background;
  REQUIRE(bit_equal(s1.D, expected));

  // spectra have unit column sums; every factor entry is positive
  for (Index k = 0; k < 3; ++k)
    REQUIRE(std::abs(s1.A_true.col(k).sum() - 1.0) <= 1e-12);
  REQUIRE(s1.A_true.minCoeff() > 0.0);
  REQUIRE(s1.S_true.minCoeff() > 0.0);  // the plateau keeps amplitudes off zero
  REQUIRE(s1.background.minCoeff() > 0.0);
  REQUIRE(s1.background.sum() ==
          Catch::Approx(spec.background_level * spec.amplitude).epsilon(1e-12));

  Scene other = gen_scene([&] {
    SceneSpec t = spec;
    t.seed = 10;
    return t;
  }());
  REQUIRE_FALSE(bit_equal(s1.D, other.D));
}

TEST_CASE("gen_scene adds clipped noise and validates its inputs") {
  SceneSpec spec;
  spec.bands = 4;
  spec.height = 4;
  spec.width = 4;
  spec.components = 2;
  spec.amplitude = 1.0;  // small scale so the clip at zero actually engages
  spec.noise_sigma = 2.0;
  spec.seed = 5;
  Scene noisy = gen_scene(spec);
  REQUIRE(noisy.D.minCoeff() >= 0.0);
  Matrix clean = noisy.A_true * noisy.S_true;
  REQUIRE_FALSE(bit_equal(noisy.D, clean));

  SceneSpec bad = spec;
  bad.bands = 0;
  REQUIRE_THROWS_AS(gen_scene(bad), InputError);
  bad = spec;
  bad.noise_sigma = -0.1;
  REQUIRE_THROWS_AS(gen_scene(bad), InputError);
  bad = spec;
  bad.amplitude = 0.0;
  REQUIRE_THROWS_AS(gen_scene(bad), InputError);
  bad = spec;
  bad.background_level = -0.5;
  REQUIRE_THROWS_AS(gen_scene(bad), InputError);
  bad = spec;
  bad.height = 1;  // fewer rows than components
  REQUIRE_THROWS_AS(gen_scene(bad), InputError);
}
