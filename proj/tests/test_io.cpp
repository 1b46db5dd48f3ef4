#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "sglgg/datagen.hpp"
#include "sglgg/io.hpp"

using namespace sglgg;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("sglgg_io_" + std::to_string(std::random_device{}()) + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// a 3-sample, 2-feature fixture with two groups and one edge
struct Fixture {
  TempDir dir;
  Fixture() {
    write_text_atomic(dir.file("matrix.csv"),
                      "sample_id,snp_a,snp_b\ns1,0.25,1.5\ns2,-1,0.125\ns3,2,-0.75\n");
    write_text_atomic(dir.file("pheno.csv"), "s2,0.5\ns1,1.25\ns3,-0.5\n");
    write_text_atomic(dir.file("groups.csv"), "snp_a,geneX\nsnp_b,geneY\n");
    write_text_atomic(dir.file("graph.csv"), "geneX,geneY,0.75\n");
  }
};

}  // namespace

TEST_CASE("load_design reads and joins the four files") {
  Fixture fx;
  const LoadedDesign design = load_design(fx.dir.file("matrix.csv"), fx.dir.file("pheno.csv"),
                                          fx.dir.file("groups.csv"), fx.dir.file("graph.csv"));
  CHECK(design.data.n() == 3);
  CHECK(design.data.p() == 2);
  CHECK(design.data.a(0, 0) == 0.25);
  CHECK(design.data.a(2, 1) == -0.75);
  // phenotype joined by sample id, not file order
  CHECK(design.data.y[0] == 1.25);
  CHECK(design.data.y[1] == 0.5);
  CHECK(design.groups.k() == 2);
  CHECK(design.group_names == std::vector<std::string>{"geneX", "geneY"});
  REQUIRE(design.graph.edges.size() == 1);
  CHECK(design.graph.edges[0].r == 0.75);
}

TEST_CASE("save and re-load round-trips bit-identically") {
  Fixture fx;
  const LoadedDesign design = load_design(fx.dir.file("matrix.csv"), fx.dir.file("pheno.csv"),
                                          fx.dir.file("groups.csv"), fx.dir.file("graph.csv"));
  TempDir out;
  write_text_atomic(out.file("matrix.csv"), matrix_csv(design.data));
  write_text_atomic(out.file("pheno.csv"), phenotype_csv(design.data));
  write_text_atomic(out.file("groups.csv"), groups_csv(design.data.feature_ids, design.groups,
                                                       design.group_names));
  write_text_atomic(out.file("graph.csv"), graph_csv(design.graph, design.group_names));

  const LoadedDesign reloaded = load_design(out.file("matrix.csv"), out.file("pheno.csv"),
                                            out.file("groups.csv"), out.file("graph.csv"));
  CHECK((reloaded.data.a - design.data.a).cwiseAbs().maxCoeff() == 0.0);
  CHECK((reloaded.data.y - design.data.y).cwiseAbs().maxCoeff() == 0.0);

  // a second save produces byte-identical files
  TempDir again;
  write_text_atomic(again.file("matrix.csv"), matrix_csv(reloaded.data));
  CHECK(slurp(out.file("matrix.csv")) == slurp(again.file("matrix.csv")));
}

TEST_CASE("full-precision doubles survive the text round trip") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 200; ++trial) {
    const double value = normal(rng) * std::pow(10.0, static_cast<int>(rng() % 13) - 6);
    const std::string text = format_double(value);
    double parsed = 0;
    REQUIRE(std::from_chars(text.data(), text.data() + text.size(), parsed).ec == std::errc());
    CHECK(parsed == value);
  }
}

TEST_CASE("loader errors carry file and line context") {
  Fixture fx;

  SECTION("unknown feature in the group file") {
    write_text_atomic(fx.dir.file("groups.csv"), "snp_a,geneX\nsnp_z,geneY\n");
    CHECK_THROWS_WITH(load_design(fx.dir.file("matrix.csv"), fx.dir.file("pheno.csv"),
                                  fx.dir.file("groups.csv"), fx.dir.file("graph.csv")),
                      Catch::Matchers::ContainsSubstring("snp_z"));
  }
  SECTION("feature missing from the group file") {
    write_text_atomic(fx.dir.file("groups.csv"), "snp_a,geneX\n");
    CHECK_THROWS_WITH(load_design(fx.dir.file("matrix.csv"), fx.dir.file("pheno.csv"),
                                  fx.dir.file("groups.csv"), fx.dir.file("graph.csv")),
                      Catch::Matchers::ContainsSubstring("snp_b"));
  }
  SECTION("unknown group in the graph file") {
    write_text_atomic(fx.dir.file("graph.csv"), "geneX,geneQ,0.5\n");
    CHECK_THROWS_WITH(load_design(fx.dir.file("matrix.csv"), fx.dir.file("pheno.csv"),
                                  fx.dir.file("groups.csv"), fx.dir.file("graph.csv")),
                      Catch::Matchers::ContainsSubstring("geneQ"));
  }
  SECTION("ragged matrix row names its line") {
    write_text_atomic(fx.dir.file("matrix.csv"), "sample_id,snp_a,snp_b\ns1,0.25,1.5\ns2,-1\n");
    CHECK_THROWS_WITH(load_matrix(fx.dir.file("matrix.csv")),
                      Catch::Matchers::ContainsSubstring(":3"));
  }
  SECTION("non-numeric cell names line and column") {
    write_text_atomic(fx.dir.file("matrix.csv"), "sample_id,snp_a,snp_b\ns1,0.25,oops\ns2,-1,0\n");
    CHECK_THROWS_WITH(load_matrix(fx.dir.file("matrix.csv")),
                      Catch::Matchers::ContainsSubstring("oops") &&
                          Catch::Matchers::ContainsSubstring(":2"));
  }
  SECTION("duplicate phenotype row") {
    write_text_atomic(fx.dir.file("pheno.csv"), "s1,0.5\ns1,1.25\ns3,-0.5\n");
    Dataset data = load_matrix(fx.dir.file("matrix.csv"));
    CHECK_THROWS_WITH(load_phenotype(fx.dir.file("pheno.csv"), data),
                      Catch::Matchers::ContainsSubstring("duplicate"));
  }
  SECTION("missing file") {
    CHECK_THROWS_AS(load_matrix(fx.dir.file("nope.csv")), IoError);
  }
}

TEST_CASE("random truncations never load silently") {
  Fixture fx;
  const std::vector<std::string> files = {"matrix.csv", "pheno.csv", "groups.csv"};
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 30; ++trial) {
    // copy the fixture, then truncate one file at a random byte boundary
    TempDir mutated;
    for (const auto& f : {"matrix.csv", "pheno.csv", "groups.csv", "graph.csv"})
      write_text_atomic(mutated.file(f), slurp(fx.dir.file(f)));
    const std::string victim = files[rng() % files.size()];
    std::string content = slurp(fx.dir.file(victim));
    const std::size_t keep = 1 + rng() % (content.size() - 2);
    write_text_atomic(mutated.file(victim), content.substr(0, keep));
    try {
      const LoadedDesign design = load_design(mutated.file("matrix.csv"), mutated.file("pheno.csv"),
                                              mutated.file("groups.csv"), mutated.file("graph.csv"));
      // a truncation that survives parsing must not silently change shape
      CHECK((design.data.n() == 3 && design.data.p() == 2));
    } catch (const IoError&) {
      SUCCEED();
    } catch (const std::invalid_argument&) {
      SUCCEED();
    }
  }
}

TEST_CASE("tab-delimited input is accepted") {
  TempDir dir;
  write_text_atomic(dir.file("matrix.tsv"), "sample_id\tsnp_a\tsnp_b\ns1\t1\t2\ns2\t-1\t-2\n");
  const Dataset data = load_matrix(dir.file("matrix.tsv"));
  CHECK(data.p() == 2);
  CHECK(data.a(1, 1) == -2);
}

TEST_CASE("paper-scale fixture: 504 features in 10 groups") {
  // group sizes follow the ten-gene panel: 135, 22, 15, 164, 38, 5, 14, 7, 88, 16
  const std::vector<int> sizes{135, 22, 15, 164, 38, 5, 14, 7, 88, 16};
  SyntheticSpec spec;
  spec.n = 12;
  spec.k = 10;
  spec.sizes = sizes;
  spec.active_groups = {3, 5};
  spec.graph = GeneGraph::empty(10);
  spec.graph.add_edge(3, 5, 1.0);
  spec.noise_sd = 0.1;
  spec.seed = 4;
  const auto sim = simulate(spec);

  std::vector<std::string> group_names;
  for (int g = 0; g < 10; ++g) group_names.push_back("gene" + std::to_string(g));

  TempDir dir;
  write_text_atomic(dir.file("matrix.csv"), matrix_csv(sim.data));
  write_text_atomic(dir.file("pheno.csv"), phenotype_csv(sim.data));
  write_text_atomic(dir.file("groups.csv"), groups_csv(sim.data.feature_ids, sim.groups, group_names));
  write_text_atomic(dir.file("graph.csv"), graph_csv(sim.graph, group_names));

  const LoadedDesign design = load_design(dir.file("matrix.csv"), dir.file("pheno.csv"),
                                          dir.file("groups.csv"), dir.file("graph.csv"));
  CHECK(design.data.p() == 504);
  CHECK(design.groups.k() == 10);
  CHECK(design.groups.group_sizes() == sizes);
}

TEST_CASE("atomic writes leave no temporary behind") {
  TempDir dir;
  write_text_atomic(dir.file("out.csv"), "a,b\n");
  CHECK(fs::exists(dir.file("out.csv")));
  CHECK_FALSE(fs::exists(dir.file("out.csv.tmp")));
}

TEST_CASE("digest is stable and content-sensitive") {
  TempDir dir;
  write_text_atomic(dir.file("x"), "hello");
  write_text_atomic(dir.file("y"), "hello");
  write_text_atomic(dir.file("z"), "hellp");
  CHECK(digest_file(dir.file("x")) == digest_file(dir.file("y")));
  CHECK(digest_file(dir.file("x")) != digest_file(dir.file("z")));
  CHECK(digest_file(dir.file("x")).size() == 16);
}

TEST_CASE("report serializers emit one row per item") {
  StabilityReport report;
  report.frequency = (VectorXd(3) << 0.5, 1.0, 0.25).finished();
  report.n_sims = 4;
  const std::string csv = stability_csv(report, {"a", "b", "c"});
  CHECK(csv == "feature_id,frequency,rank\na,0.5,2\nb,1,1\nc,0.25,3\n");

  CvReport cv;
  cv.grid = {{0.5, 0, 0}, {0.25, 0, 0}};
  cv.mean_mse = {1.5, 2.5};
  cv.std_mse = {0.1, 0.2};
  const std::string cv_text = cv_csv(cv);
  CHECK(cv_text == "l1,l2,l3,mean_mse,std_mse\n0.5,0,0,1.5,0.1\n0.25,0,0,2.5,0.2\n");
}
