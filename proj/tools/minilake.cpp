// minilake CLI: workspace management, runs, queries, governance, the tool
// server, and the agent harness behind one binary.

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "minilake/agent.hpp"
#include "minilake/catalog.hpp"
#include "minilake/codec.hpp"
#include "minilake/csv.hpp"
#include "minilake/error.hpp"
#include "minilake/eval.hpp"
#include "minilake/fs_util.hpp"
#include "minilake/plan_parser.hpp"
#include "minilake/run_engine.hpp"
#include "minilake/scenario.hpp"
#include "minilake/step_worker.hpp"
#include "minilake/tool_client.hpp"
#include "minilake/tool_server.hpp"
#include "minilake/tool_service.hpp"
#include "minilake/typecheck.hpp"
#include "minilake/workspace.hpp"

namespace fs = std::filesystem;
using namespace minilake;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kDomainError = 2;
constexpr int kRunFailed = 3;
constexpr int kVerificationFailed = 4;

struct Cli {
  std::string workspace = ".";
  bool json = false;
  int exit_code = kOk;

  Workspace open() { return Workspace::open(workspace); }

  void emit(const nlohmann::json& doc, const std::string& text) const {
    if (json) {
      std::cout << doc.dump(2) << "\n";
    } else if (!text.empty()) {
      std::cout << text;
    }
  }
};

Principal cli_principal() { return {"cli", {Grant{GrantKind::Admin, ""}}}; }

std::string cell_text(const CellValue& cell) {
  if (is_null(cell)) return "null";
  if (const auto* i = std::get_if<int64_t>(&cell)) return std::to_string(*i);
  if (std::holds_alternative<double>(cell)) {
    nlohmann::json j = cell_to_json(cell);
    return j.is_string() ? j.get<std::string>() : j.dump();
  }
  if (const auto* s = std::get_if<std::string>(&cell)) return *s;
  return std::get<bool>(cell) ? "true" : "false";
}

std::string render_table(const Table& table, uint64_t max_rows) {
  uint64_t shown = std::min(table.row_count, max_rows);
  size_t cols = table.schema.columns.size();
  std::vector<size_t> width(cols);
  std::vector<std::vector<std::string>> cells(shown, std::vector<std::string>(cols));
  for (size_t c = 0; c < cols; ++c) {
    width[c] = table.schema.columns[c].name.size();
    for (uint64_t r = 0; r < shown; ++r) {
      cells[r][c] = cell_text(table.columns[c][r]);
      width[c] = std::max(width[c], cells[r][c].size());
    }
  }
  std::string out;
  auto pad = [](const std::string& s, size_t w) {
    return s + std::string(w - s.size(), ' ');
  };
  for (size_t c = 0; c < cols; ++c) {
    if (c) out += " | ";
    out += pad(table.schema.columns[c].name, width[c]);
  }
  out += "\n";
  for (size_t c = 0; c < cols; ++c) {
    if (c) out += "-+-";
    out += std::string(width[c], '-');
  }
  out += "\n";
  for (uint64_t r = 0; r < shown; ++r) {
    for (size_t c = 0; c < cols; ++c) {
      if (c) out += " | ";
      out += pad(cells[r][c], width[c]);
    }
    out += "\n";
  }
  if (shown < table.row_count) {
    out += "(" + std::to_string(table.row_count - shown) + " more rows)\n";
  }
  return out;
}

std::string iso_utc(int64_t seconds) {
  std::time_t t = static_cast<std::time_t>(seconds);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Table load_table_at(Workspace& ws, const std::string& ref,
                    const std::string& name) {
  Commit commit = ws.catalog().load_commit(ws.catalog().resolve_ref(ref));
  auto it = commit.table_map.find(name);
  if (it == commit.table_map.end()) {
    raise(Errc::UnknownTable, "no table '" + name + "' at " + ref);
  }
  auto bytes = ws.catalog().get_object(it->second.data_id);
  if (!bytes) raise(Errc::DanglingSnapshot, "data object missing for " + name);
  return decode_table(*bytes);
}

nlohmann::json diff_to_json(const TableDiffSet& diff) {
  nlohmann::json changed = nlohmann::json::object();
  for (const auto& [name, change] : diff.changed) {
    changed[name] = {{"before", change.before.data_id.hex()},
                     {"after", change.after.data_id.hex()}};
  }
  return {{"added", diff.added}, {"removed", diff.removed}, {"changed", changed}};
}

int run_exit_code(const RunRecord& record) {
  switch (record.status) {
    case RunStatus::Success: return kOk;
    case RunStatus::Failed: return kRunFailed;
    case RunStatus::Blocked:
      return record.error.rfind("verification failed", 0) == 0
                 ? kVerificationFailed
                 : kDomainError;
    default: return kDomainError;
  }
}

void print_run_text(Cli& cli, Workspace& ws, RunEngine& engine,
                    const RunRecord& record) {
  if (cli.json) return;
  std::cout << "run " << record.run_id << " (branch " << record.run_branch
            << ", status " << run_status_name(record.status) << ")\n";
  for (const auto& step : record.steps) {
    std::cout << "  " << step.name << "\t" << step.status;
    if (step.status == "OK") std::cout << "\t" << step.row_count << " rows";
    std::cout << "\n";
  }
  if (record.status == RunStatus::Success && record.merged_commit) {
    std::cout << "merged " << record.merged_commit->hex() << "\n";
  } else if (record.status == RunStatus::Success) {
    std::cout << "left unmerged on " << record.run_branch << "\n";
  } else if (record.status == RunStatus::Failed) {
    std::string failing;
    for (const auto& step : record.steps) {
      if (step.status == "FAILED") failing = step.name;
    }
    std::cout << "run FAILED at " << failing << "\n";
    auto logs = engine.get_run_logs(record.run_id);
    size_t start = logs.size() > 5 ? logs.size() - 5 : 0;
    for (size_t i = start; i < logs.size(); ++i) {
      std::cout << "  " << logs[i].severity << " " << logs[i].text << "\n";
    }
  } else {
    std::cout << "run BLOCKED: " << record.error << "\n";
  }
  (void)ws;
}

void add_init(CLI::App& app, Cli& cli) {
  auto* cmd = app.add_subcommand("init", "Initialize a workspace");
  cmd->callback([&cli] {
    Workspace ws = Workspace::init(cli.workspace);
    cli.emit({{"workspace", fs::absolute(cli.workspace).string()},
              {"main_head", ws.catalog().resolve_ref("main").hex()}},
             "initialized workspace at " +
                 fs::absolute(cli.workspace).string() + "\n");
  });
}

void add_table(CLI::App& app, Cli& cli) {
  auto* table = app.add_subcommand("table", "Table operations");
  table->require_subcommand(1);
  auto* import = table->add_subcommand("import", "Import a CSV file");
  auto branch = std::make_shared<std::string>("main");
  auto name = std::make_shared<std::string>();
  auto schema_file = std::make_shared<std::string>();
  auto csv_file = std::make_shared<std::string>();
  import->add_option("--branch", *branch, "Target branch");
  import->add_option("--name", *name, "Table name")->required();
  import->add_option("--schema", *schema_file, "Schema JSON file")->required();
  import->add_option("csv", *csv_file, "CSV file")->required();
  import->callback([&cli, branch, name, schema_file, csv_file] {
    Workspace ws = cli.open();
    Schema schema = decode_schema(read_file(*schema_file));
    Table t = import_csv(read_file(*csv_file), schema);
    Commit commit =
        ws.commit_table(*branch, *name, t, "import " + *name, "cli");
    cli.emit({{"branch", *branch},
              {"table", *name},
              {"rows", t.row_count},
              {"commit", commit.id.hex()}},
             "imported " + std::to_string(t.row_count) + " rows into " +
                 *name + " on " + *branch + " (commit " +
                 commit.id.short_hex() + ")\n");
  });
}

void add_run(CLI::App& app, Cli& cli) {
  auto* cmd = app.add_subcommand("run", "Run a pipeline project");
  auto project_dir = std::make_shared<std::string>();
  auto branch = std::make_shared<std::string>("main");
  auto no_merge = std::make_shared<bool>(false);
  auto isolation = std::make_shared<std::string>("inprocess");
  cmd->add_option("--project_dir", *project_dir, "Project directory")->required();
  cmd->add_option("--branch", *branch, "Target branch");
  cmd->add_flag("--no-merge", *no_merge, "Skip the final merge");
  cmd->add_option("--isolation", *isolation, "inprocess|subprocess")
      ->check(CLI::IsMember({"inprocess", "subprocess"}));
  cmd->callback([&cli, project_dir, branch, no_merge, isolation] {
    Workspace ws = cli.open();
    RunEngine engine(ws);
    RunOptions options;
    options.no_merge = *no_merge;
    options.isolation = *isolation == "subprocess" ? IsolationMode::Subprocess
                                                   : IsolationMode::InProcess;
    RunRecord record = engine.run_pipeline(load_project(*project_dir), *branch,
                                           cli_principal(), options);
    print_run_text(cli, ws, engine, record);
    if (cli.json) std::cout << record.to_json().dump(2) << "\n";
    cli.exit_code = run_exit_code(record);
  });
}

void add_branch(CLI::App& app, Cli& cli) {
  auto* branch = app.add_subcommand("branch", "Branch operations");
  branch->require_subcommand(1);

  auto* create = branch->add_subcommand("create", "Create a branch");
  auto name = std::make_shared<std::string>();
  auto from = std::make_shared<std::string>("main");
  create->add_option("name", *name, "New branch name")->required();
  create->add_option("--from", *from, "Source ref");
  create->callback([&cli, name, from] {
    Workspace ws = cli.open();
    BranchRef ref = ws.catalog().create_branch(*name, *from);
    cli.emit({{"branch", ref.name}, {"head", ref.head.hex()}},
             "created " + ref.name + " at " + ref.head.short_hex() + "\n");
  });

  auto* list = branch->add_subcommand("list", "List branches");
  list->callback([&cli] {
    Workspace ws = cli.open();
    nlohmann::json doc = nlohmann::json::array();
    std::string text;
    for (const auto& b : ws.catalog().list_branches()) {
      doc.push_back({{"name", b.name}, {"head", b.head.hex()}});
      text += b.name + "\t" + b.head.short_hex() + "\n";
    }
    cli.emit({{"branches", doc}}, text);
  });

  auto* del = branch->add_subcommand("delete", "Delete a branch");
  auto del_name = std::make_shared<std::string>();
  del->add_option("name", *del_name, "Branch name")->required();
  del->callback([&cli, del_name] {
    Workspace ws = cli.open();
    ws.catalog().delete_branch(*del_name);
    cli.emit({{"deleted", *del_name}}, "deleted " + *del_name + "\n");
  });
}

void add_merge(CLI::App& app, Cli& cli) {
  auto* cmd = app.add_subcommand("merge", "Merge source ref into target branch");
  auto source = std::make_shared<std::string>();
  auto target = std::make_shared<std::string>();
  cmd->add_option("source", *source, "Source ref")->required();
  cmd->add_option("target", *target, "Target branch")->required();
  cmd->callback([&cli, source, target] {
    Workspace ws = cli.open();
    GateOutcome outcome =
        ws.governance().gated_merge(cli_principal(), *source, *target);
    nlohmann::json doc = {{"status", gate_status_name(outcome.status)}};
    std::string text;
    switch (outcome.status) {
      case GateStatus::Merged:
        doc["commit"] = outcome.commit->id.hex();
        if (outcome.report) doc["report"] = outcome.report->to_json();
        text = "merged " + *source + " into " + *target + " (commit " +
               outcome.commit->id.short_hex() + ")\n";
        break;
      case GateStatus::VerificationFailed: {
        doc["report"] = outcome.report->to_json();
        text = "verification failed; " + *target + " unchanged\n";
        for (const auto& check : outcome.report->checks) {
          text += "  [" + std::string(check.passed ? "pass" : "FAIL") + "] " +
                  check.description + ": " + check.message + "\n";
        }
        cli.exit_code = kVerificationFailed;
        break;
      }
      case GateStatus::Denied:
        doc["reason"] = outcome.reason;
        text = "merge denied: " + outcome.reason + "\n";
        cli.exit_code = kDomainError;
        break;
    }
    cli.emit(doc, text);
  });
}

void add_revert(CLI::App& app, Cli& cli) {
  auto* cmd = app.add_subcommand("revert", "Revert a branch to a prior commit");
  auto branch = std::make_shared<std::string>();
  auto commit = std::make_shared<std::string>();
  cmd->add_option("branch", *branch, "Branch")->required();
  cmd->add_option("commit", *commit, "Ancestor commit id")->required();
  cmd->callback([&cli, branch, commit] {
    Workspace ws = cli.open();
    Commit c = ws.catalog().revert(*branch, ObjectId::from_hex(*commit), "cli");
    cli.emit({{"branch", *branch}, {"head", c.id.hex()}},
             "reverted " + *branch + " to the state of " +
                 ObjectId::from_hex(*commit).short_hex() + " (new head " +
                 c.id.short_hex() + ")\n");
  });
}

void add_query(CLI::App& app, Cli& cli) {
  auto* cmd = app.add_subcommand("query", "Evaluate a plan against a ref");
  auto ref = std::make_shared<std::string>("main");
  auto plan_text = std::make_shared<std::string>();
  auto limit = std::make_shared<uint64_t>(100);
  cmd->add_option("--ref", *ref, "Branch or commit");
  cmd->add_option("--limit", *limit, "Max rows to print");
  cmd->add_option("plan", *plan_text, "Plan text")->required();
  cmd->callback([&cli, ref, plan_text, limit] {
    Workspace ws = cli.open();
    Plan plan = parse_plan(*plan_text);
    std::map<std::string, Table> inputs;
    std::map<std::string, Schema> schemas;
    for (const auto& name : plan.input_names()) {
      Table t = load_table_at(ws, *ref, name);
      schemas.emplace(name, t.schema);
      inputs.emplace(name, std::move(t));
    }
    typecheck(plan, schemas);
    Table out = eval_plan(plan, inputs);
    if (cli.json) {
      nlohmann::json rows = nlohmann::json::array();
      uint64_t shown = std::min(out.row_count, *limit);
      for (uint64_t r = 0; r < shown; ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (size_t c = 0; c < out.columns.size(); ++c) {
          row.push_back(cell_to_json(out.columns[c][r]));
        }
        rows.push_back(std::move(row));
      }
      cli.emit({{"schema", schema_to_json(out.schema)},
                {"rows", rows},
                {"row_count", out.row_count},
                {"truncated", shown < out.row_count}},
               "");
    } else {
      std::cout << render_table(out, *limit);
    }
  });
}

void add_log(CLI::App& app, Cli& cli) {
  auto* cmd = app.add_subcommand("log", "Show a branch's first-parent history");
  auto branch = std::make_shared<std::string>("main");
  cmd->add_option("branch", *branch, "Branch");
  cmd->callback([&cli, branch] {
    Workspace ws = cli.open();
    nlohmann::json doc = nlohmann::json::array();
    std::string text;
    for (const auto& c : ws.catalog().log(*branch)) {
      nlohmann::json parents = nlohmann::json::array();
      for (const auto& p : c.parents) parents.push_back(p.hex());
      doc.push_back({{"id", c.id.hex()},
                     {"parents", parents},
                     {"author", c.author},
                     {"message", c.message},
                     {"timestamp", c.timestamp},
                     {"tables", ws.catalog().list_tables(c.id.hex())}});
      text += c.id.short_hex() + "  " + iso_utc(c.timestamp) + "  " +
              c.author + "  " + c.message + "\n";
    }
    cli.emit({{"commits", doc}}, text);
  });
}

void add_diff(CLI::App& app, Cli& cli) {
  auto* cmd = app.add_subcommand("diff", "Table-level diff between two refs");
  auto ref_a = std::make_shared<std::string>();
  auto ref_b = std::make_shared<std::string>();
  cmd->add_option("ref_a", *ref_a, "Base ref")->required();
  cmd->add_option("ref_b", *ref_b, "Other ref")->required();
  cmd->callback([&cli, ref_a, ref_b] {
    Workspace ws = cli.open();
    TableDiffSet diff = ws.catalog().diff(*ref_a, *ref_b);
    std::string text;
    for (const auto& name : diff.added) text += "+ " + name + "\n";
    for (const auto& name : diff.removed) text += "- " + name + "\n";
    for (const auto& [name, change] : diff.changed) text += "~ " + name + "\n";
    if (text.empty()) text = "no differences\n";
    cli.emit(diff_to_json(diff), text);
  });
}

void add_keys(CLI::App& app, Cli& cli) {
  auto* keys = app.add_subcommand("keys", "API key management");
  keys->require_subcommand(1);
  auto* create = keys->add_subcommand("create", "Create an API key");
  auto key_id = std::make_shared<std::string>();
  auto grants = std::make_shared<std::string>();
  create->add_option("--key-id", *key_id, "Key identifier")->required();
  create
      ->add_option("--grants", *grants,
                   "Comma-separated, e.g. read,write:debug/*,merge:main")
      ->required();
  create->callback([&cli, key_id, grants] {
    Workspace ws = cli.open();
    auto created =
        ws.governance().create_key(*key_id, parse_grant_list(*grants));
    cli.emit({{"key_id", created.key_id}, {"secret", created.secret}},
             "created key " + created.key_id + "\nsecret (shown once): " +
                 created.secret + "\n");
  });
}

void add_verifier(CLI::App& app, Cli& cli) {
  auto* verifier = app.add_subcommand("verifier", "Verifier management");
  verifier->require_subcommand(1);
  auto* set = verifier->add_subcommand("set", "Register a verifier spec");
  auto file = std::make_shared<std::string>();
  set->add_option("file", *file, "Verifier JSON file")->required();
  set->callback([&cli, file] {
    Workspace ws = cli.open();
    VerifierSpec spec =
        verifier_spec_from_json(nlohmann::json::parse(read_file(*file)));
    ws.governance().set_verifier(spec);
    cli.emit({{"target_branch", spec.target_branch},
              {"checks", spec.checks.size()}},
             "verifier set for " + spec.target_branch + " (" +
                 std::to_string(spec.checks.size()) + " checks)\n");
  });
}

void add_serve(CLI::App& app, Cli& cli) {
  auto* cmd = app.add_subcommand("serve", "Serve the JSON-RPC tool API");
  auto port = std::make_shared<int>(7333);
  cmd->add_option("--port", *port, "Listen port");
  cmd->callback([&cli, port] {
    Workspace ws = cli.open();
    cli.exit_code = serve_blocking(ws, *port);
  });
}

void add_scenario(CLI::App& app, Cli& cli) {
  auto* scenario = app.add_subcommand("scenario", "Scenario fixtures");
  scenario->require_subcommand(1);
  auto* setup = scenario->add_subcommand("setup", "Build a scenario workspace");
  auto variant = std::make_shared<std::string>("numpy2");
  setup->add_option("--variant", *variant, "numpy2|healthy")
      ->check(CLI::IsMember({"numpy2", "healthy"}));
  setup->callback([&cli, variant] {
    Workspace ws = Workspace::is_initialized(cli.workspace)
                       ? Workspace::open(cli.workspace)
                       : Workspace::init(cli.workspace);
    ScenarioVariant v = *variant == "healthy" ? ScenarioVariant::Healthy
                                              : ScenarioVariant::Numpy2;
    ScenarioManifest m = scenario_setup(ws, v);
    cli.emit(m.to_json(),
             std::string("scenario ") + scenario_variant_name(m.variant) +
                 " ready: project " + m.project + ", setup run " + m.run_id +
                 "\nagent key " + m.agent_key_id + " secret " +
                 m.agent_secret + "\n");
  });
}

void add_agent(CLI::App& app, Cli& cli) {
  auto* agent = app.add_subcommand("agent", "Agent episodes");
  agent->require_subcommand(1);
  auto* repair = agent->add_subcommand("repair", "Run the repair policy");
  auto endpoint = std::make_shared<std::string>();
  auto in_process = std::make_shared<bool>(false);
  auto budget_calls = std::make_shared<uint64_t>(20);
  repair->add_option("--endpoint", *endpoint, "http://host:port of a server");
  repair->add_flag("--in-process", *in_process, "Library-direct (default)");
  repair->add_option("--budget", *budget_calls, "Max tool calls");
  repair->callback([&cli, endpoint, in_process, budget_calls] {
    Workspace ws = cli.open();
    ScenarioManifest manifest = load_scenario(ws);

    std::string api_key = manifest.agent_secret;
    if (const char* env = std::getenv("MINILAKE_API_KEY");
        env && *env != '\0') {
      api_key = env;
    }

    std::unique_ptr<ToolService> service;
    std::unique_ptr<ToolClient> client;
    if (!endpoint->empty()) {
      std::string rest = *endpoint;
      if (rest.rfind("http://", 0) == 0) rest = rest.substr(7);
      auto colon = rest.rfind(':');
      if (colon == std::string::npos) {
        raise(Errc::InvalidArgument, "endpoint must be host:port");
      }
      std::string host = rest.substr(0, colon);
      int port = std::stoi(rest.substr(colon + 1));
      client = std::make_unique<HttpToolClient>(host, port, api_key);
    } else {
      service = std::make_unique<ToolService>(ws);
      client = std::make_unique<InProcessToolClient>(*service, api_key);
    }

    RepairPolicy policy;
    Budget budget;
    budget.max_tool_calls = *budget_calls;
    Transcript t = run_episode(policy, *client, manifest.goal, budget);
    EpisodeMetrics metrics = evaluate_episode(t, ws, manifest);

    uint64_t n = 1;
    for (const auto& entry : fs::directory_iterator(ws.episodes_dir())) {
      if (entry.path().extension() == ".json") ++n;
    }
    char file_name[16];
    std::snprintf(file_name, sizeof(file_name), "%04llu.json",
                  static_cast<unsigned long long>(n));
    fs::path transcript_file = ws.episodes_dir() / file_name;
    write_file_atomic(transcript_file, t.to_json().dump(2) + "\n");

    std::string text =
        std::string("episode ") +
        (t.outcome == EpisodeOutcome::Success ? "SUCCESS" : "FAILURE") + ": " +
        t.outcome_reason + "\ntool calls: " + std::to_string(t.tool_calls) +
        "\nrepaired: " + (metrics.repaired ? "yes" : "no") +
        "\nsafety: " + (metrics.safety ? "yes" : "no") +
        "\ntranscript: " + transcript_file.string() + "\n";
    cli.emit({{"transcript", t.to_json()},
              {"metrics", metrics.to_json()},
              {"transcript_file", transcript_file.string()}},
             text);
    if (t.outcome != EpisodeOutcome::Success) cli.exit_code = kRunFailed;
  });
}

}  // namespace

int main(int argc, char** argv) {
  // Hidden entry point for SUBPROCESS isolation: the sandbox re-executes
  // this binary with "step-worker" and speaks frames over stdin/stdout.
  if (argc > 1 && std::string(argv[1]) == "step-worker") {
    return run_step_worker(0, 1);
  }

  std::error_code ec;
  fs::path self = fs::canonical("/proc/self/exe", ec);
  setenv("MINILAKE_WORKER_EXE", ec ? argv[0] : self.c_str(), 1);

  Cli cli;
  CLI::App app{"minilake: a miniature agentic lakehouse"};
  app.require_subcommand(1);
  app.add_option("--workspace", cli.workspace, "Workspace directory")
      ->envname("MINILAKE_WORKSPACE");
  app.add_flag("--json", cli.json, "Machine-readable output");

  add_init(app, cli);
  add_table(app, cli);
  add_run(app, cli);
  add_branch(app, cli);
  add_merge(app, cli);
  add_revert(app, cli);
  add_query(app, cli);
  add_log(app, cli);
  add_diff(app, cli);
  add_keys(app, cli);
  add_verifier(app, cli);
  add_serve(app, cli);
  add_scenario(app, cli);
  add_agent(app, cli);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    if (cli.json) {
      std::cout << nlohmann::json{{"error", {{"kind", e.kind()},
                                             {"message", e.what()}}}}
                       .dump(2)
                << "\n";
    }
    std::cerr << "error: " << e.kind() << ": " << e.what() << "\n";
    return kDomainError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDomainError;
  }
  return cli.exit_code;
}
