// Command-line surface: parse system files, run analyses, emit reports.
// Exit codes: 0 success, 2 validation or input failure, 3 enumeration budget
// exceeded, 1 internal error. Reports go to stdout (or --out) as canonical
// JSON; error objects always go to stdout so callers can parse either way.

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "cbd/contextuality.hpp"
#include "cbd/corpus.hpp"
#include "cbd/coupling.hpp"
#include "cbd/json_io.hpp"
#include "cbd/lp.hpp"
#include "cbd/model.hpp"

namespace {

using cbd::Json;
using cbd::Q;

struct Options {
  std::string mode_name = "exact";
  std::uint64_t budget = cbd::kDefaultBudget;
  std::size_t limit = 16;
  bool limit_given = false;
  std::string out;

  cbd::SolveMode mode() const {
    return mode_name == "fast" ? cbd::SolveMode::fast : cbd::SolveMode::exact;
  }
};

int write_output(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return 0;
  }
  std::ofstream f(out_path, std::ios::binary);
  f << text;
  f.close();
  if (!f) {
    std::cerr << "cannot write " << out_path << "\n";
    return 2;
  }
  return 0;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw cbd::Error(cbd::Errc::parse_error, "cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

cbd::CCSystem load_system(const std::string& path) {
  return cbd::system_from_text(read_file(path));
}

/// Loads and gates on validation; on failure prints the issues and throws a
/// sentinel handled by run() as exit 2.
struct InvalidSystem {
  std::string rendered;
};

cbd::CCSystem load_valid_system(const std::string& path) {
  cbd::CCSystem sys = load_system(path);
  std::vector<cbd::Issue> issues = cbd::validate(sys);
  if (!issues.empty())
    throw InvalidSystem{cbd::json_text(cbd::issues_json(issues))};
  return sys;
}

cbd::Cell parse_cell(const std::string& s) {
  auto at = s.rfind('@');
  if (at == std::string::npos || at == 0 || at + 1 == s.size())
    throw cbd::Error(cbd::Errc::parse_error,
                     "cell must be written content@context: '" + s + "'");
  return cbd::Cell{s.substr(0, at), s.substr(at + 1)};
}

/// Splits "a,b|c" into value-index classes against a value set; labels are
/// matched by their canonical text form.
std::vector<std::vector<int>> parse_classes(const std::string& spec,
                                            const cbd::ValueSet& vs) {
  std::vector<std::vector<int>> classes;
  std::vector<int> current;
  std::string token;
  auto flush_token = [&] {
    while (!token.empty() && token.front() == ' ') token.erase(token.begin());
    while (!token.empty() && token.back() == ' ') token.pop_back();
    if (token.empty())
      throw cbd::Error(cbd::Errc::parse_error, "empty label in class list");
    for (int i = 0; i < vs.size(); ++i)
      if (cbd::label_str(vs.labels[static_cast<std::size_t>(i)]) == token) {
        current.push_back(i);
        token.clear();
        return;
      }
    throw cbd::Error(cbd::Errc::bad_outcome,
                     "label '" + token + "' not in the value set");
  };
  for (char c : spec) {
    if (c == ',' || c == '|') {
      flush_token();
      if (c == '|') {
        classes.push_back(std::move(current));
        current.clear();
      }
    } else {
      token += c;
    }
  }
  flush_token();
  classes.push_back(std::move(current));
  return classes;
}

Json certificate_rows_json(const cbd::FarkasCertificate& cert,
                           const cbd::LinearProgram& lp) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < cert.row_mult.size(); ++i) {
    if (cert.row_mult[i] == 0) continue;
    Json row;
    row["index"] = i;
    row["row"] = i < lp.rows.size() ? lp.rows[i].name : std::string();
    row["multiplier"] = cbd::rational_str(cert.row_mult[i]);
    rows.push_back(std::move(row));
  }
  return rows;
}

int run_coupling(const std::string& input, const std::string& content_flag,
                 const Options& opt) {
  cbd::CCSystem sys = load_valid_system(input);
  std::string content = content_flag;
  if (content.empty()) {
    if (sys.contents.size() != 1)
      throw cbd::Error(cbd::Errc::unknown_content,
                       "system has several contents; pass --content");
    content = sys.contents[0];
  }
  cbd::Connection conn = cbd::connection_of(sys, content);
  const cbd::ValueSet& vs = sys.value_set(content);

  Json out;
  out["content"] = content;
  Json cells = Json::array();
  for (const cbd::Cell& c : conn.cells) cells.push_back(cbd::cell_str(c));
  out["cells"] = std::move(cells);

  if (vs.size() == 2) {
    out["multimaximal"] = true;
    out["unique"] = true;
    out["coupling"] = cbd::coupling_json(cbd::multimaximal_binary(conn), vs);
  } else {
    cbd::CouplingSearch search =
        cbd::multimaximal_exists(conn, opt.mode(), opt.budget);
    out["multimaximal"] = search.coupling.has_value();
    if (search.coupling) {
      out["coupling"] = cbd::coupling_json(*search.coupling, vs);
    } else if (search.certificate) {
      out["certificate"] = certificate_rows_json(*search.certificate, search.lp);
    }
  }
  if (opt.limit_given) {
    Json all = Json::array();
    for (const cbd::CouplingDistribution& cpl :
         cbd::enumerate_multimaximal(conn, opt.limit, opt.mode(), opt.budget))
      all.push_back(cbd::coupling_json(cpl, vs));
    out["couplings"] = std::move(all);
  }
  return write_output(cbd::json_text(out), opt.out);
}

int run_gen(const std::string& name, int rank, const Options& opt) {
  cbd::CCSystem sys;
  if (name == "cyclic") {
    cbd::Distribution u = cbd::joint2x2(Q(1, 4), Q(1, 4), Q(1, 4), Q(1, 4));
    sys = cbd::gen_cyclic(cbd::CyclicSpec{
        rank, std::vector<cbd::Distribution>(static_cast<std::size_t>(rank), u)});
  } else if (name == "prbox") {
    sys = cbd::gen_prbox();
  } else if (name == "rex-shape") {
    sys = cbd::gen_rex_shape();
  } else if (name == "cea18") {
    // The incidence skeleton gets uniform laws so the emitted file validates.
    sys = cbd::gen_cea18();
    cbd::fill_uniform(sys);
  } else {
    throw cbd::Error(cbd::Errc::parse_error, "unknown generator: " + name);
  }
  return write_output(cbd::system_text(sys), opt.out);
}

int run(const std::function<int()>& body) {
  try {
    return body();
  } catch (const InvalidSystem& invalid) {
    std::cout << invalid.rendered;
    return 2;
  } catch (const cbd::Error& e) {
    Json err;
    err["error"] = {{"code", std::string(cbd::errc_name(e.code()))},
                    {"detail", e.what()}};
    std::cout << cbd::json_text(err);
    if (e.code() == cbd::Errc::too_large) return 3;
    if (e.code() == cbd::Errc::internal) return 1;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contextuality analysis for content-context systems"};
  app.require_subcommand(1);
  app.fallthrough();

  Options opt;
  app.add_option("--mode", opt.mode_name, "solver arithmetic: exact or fast")
      ->check(CLI::IsMember({"exact", "fast"}));
  app.add_option("--budget", opt.budget,
                 "largest joint outcome space before TooLarge");
  auto* limit_opt =
      app.add_option("--limit", opt.limit, "vertex enumeration cap");
  app.add_option("--out", opt.out, "write output to a file instead of stdout");

  std::string input;
  std::string content;
  std::string classes;
  std::vector<std::string> drops;
  std::string gen_name;
  int rank = 3;
  bool signed_masses = false;
  int rc = 0;

  auto* validate_cmd =
      app.add_subcommand("validate", "structural and probabilistic checks");
  validate_cmd->add_option("input", input, "system JSON file")->required();
  validate_cmd->callback([&] {
    rc = run([&] {
      std::vector<cbd::Issue> issues = cbd::validate(load_system(input));
      int wrc = write_output(cbd::json_text(cbd::issues_json(issues)), opt.out);
      return issues.empty() ? wrc : 2;
    });
  });

  auto* coupling_cmd = app.add_subcommand(
      "coupling", "multimaximal coupling of one connection");
  coupling_cmd->add_option("input", input, "system JSON file")->required();
  coupling_cmd->add_option("--content", content,
                           "connection to couple (default: sole content)");
  coupling_cmd->callback([&] {
    opt.limit_given = limit_opt->count() > 0;
    rc = run([&] { return run_coupling(input, content, opt); });
  });

  auto* check_cmd =
      app.add_subcommand("check", "decide contextuality via the coupling LP");
  check_cmd->add_option("input", input, "system JSON file")->required();
  check_cmd->callback([&] {
    rc = run([&] {
      cbd::CCSystem sys = load_valid_system(input);
      Json rep = cbd::report_json(cbd::check(sys, opt.mode(), opt.budget), sys);
      return write_output(cbd::json_text(rep), opt.out);
    });
  });

  auto* measure_cmd = app.add_subcommand(
      "measure", "minimal total variation of a quasi-coupling");
  measure_cmd->add_option("input", input, "system JSON file")->required();
  measure_cmd->callback([&] {
    rc = run([&] {
      cbd::CCSystem sys = load_valid_system(input);
      Json rep = cbd::report_json(cbd::measure(sys, opt.mode(), opt.budget), sys);
      return write_output(cbd::json_text(rep), opt.out);
    });
  });

  auto* subsystem_cmd = app.add_subcommand(
      "subsystem", "delete cells and marginalize the bunch laws");
  subsystem_cmd->add_option("input", input, "system JSON file")->required();
  subsystem_cmd
      ->add_option("--drop", drops, "cell content@context to remove")
      ->required();
  subsystem_cmd->callback([&] {
    rc = run([&] {
      cbd::CCSystem sys = load_valid_system(input);
      std::vector<cbd::Cell> cells;
      for (const std::string& d : drops) cells.push_back(parse_cell(d));
      return write_output(cbd::system_text(cbd::subsystem(sys, cells)),
                          opt.out);
    });
  });

  auto* dichotomize_cmd = app.add_subcommand(
      "dichotomize", "replace a content by all its binary splits");
  dichotomize_cmd->add_option("input", input, "system JSON file")->required();
  dichotomize_cmd->add_option("--content", content, "content to split")
      ->required();
  dichotomize_cmd->callback([&] {
    rc = run([&] {
      cbd::CCSystem sys = load_valid_system(input);
      cbd::CCSystem out =
          cbd::dichotomize(sys, cbd::all_splits(sys, content));
      return write_output(cbd::system_text(out), opt.out);
    });
  });

  auto* coarsen_cmd =
      app.add_subcommand("coarsen", "lump values of one content");
  coarsen_cmd->add_option("input", input, "system JSON file")->required();
  coarsen_cmd->add_option("--content", content, "content to coarse-grain")
      ->required();
  coarsen_cmd
      ->add_option("--classes", classes,
                   "partition of labels, e.g. \"1,2|3\"")
      ->required();
  coarsen_cmd->callback([&] {
    rc = run([&] {
      cbd::CCSystem sys = load_valid_system(input);
      cbd::CCSystem out = cbd::coarse_grain(
          sys, content, parse_classes(classes, sys.value_set(content)));
      return write_output(cbd::system_text(out), opt.out);
    });
  });

  auto* gen_cmd =
      app.add_subcommand("gen", "emit a generated system as canonical JSON");
  gen_cmd
      ->add_option("name", gen_name, "cyclic, cea18, prbox, or rex-shape")
      ->required();
  gen_cmd->add_option("--rank", rank, "cyclic rank (default 3)");
  gen_cmd->callback(
      [&] { rc = run([&] { return run_gen(gen_name, rank, opt); }); });

  auto* lp_dump_cmd = app.add_subcommand(
      "lp-dump", "print the coupling linear program in exact form");
  lp_dump_cmd->add_option("input", input, "system JSON file")->required();
  lp_dump_cmd->add_flag("--signed", signed_masses,
                        "dump the signed quasi-coupling program");
  lp_dump_cmd->callback([&] {
    rc = run([&] {
      cbd::CCSystem sys = load_valid_system(input);
      cbd::CouplingSpec spec = cbd::build_coupling_spec(sys, opt.budget);
      return write_output(cbd::lp_dump(cbd::coupling_lp(spec, signed_masses)),
                          opt.out);
    });
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  return rc;
}
