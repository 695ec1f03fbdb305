// Acceptance suite: one pass/fail line per criterion, nonzero exit when
// anything fails. Tolerances and counts are pinned in code.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <stdexcept>

#include "nrt/container.hpp"
#include "nrt/hist.hpp"
#include "nrt/plugin.hpp"
#include "nrt/query.hpp"
#include "nrt/refs.hpp"
#include "nrt/sched.hpp"
#include "nrt/tree.hpp"
#include "nrt/xml.hpp"
#include "support.hpp"

using namespace nrt;
using test::Rng;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Harness {
    int failures = 0;
    int index = 0;

    void run(const std::string& name, const std::function<std::string()>& body) {
        ++index;
        std::string detail;
        bool ok = true;
        try {
            detail = body();
        } catch (const std::exception& e) {
            ok = false;
            detail = std::string("exception: ") + e.what();
        }
        if (!ok) ++failures;
        std::printf("%s  %2d. %s%s%s\n", ok ? "PASS" : "FAIL", index, name.c_str(),
                    detail.empty() ? "" : " -- ", detail.c_str());
        std::fflush(stdout);
    }
};

[[noreturn]] void fail_check(const std::string& msg) {
    throw std::runtime_error(msg);
}

void expect(bool cond, const std::string& msg) {
    if (!cond) fail_check(msg);
}

std::string fmt_count(std::size_t n, std::size_t total, double secs) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%zu/%zu in %.2fs", n, total, secs);
    return buf;
}

// --- randomized expression generator for the query criteria ---------------

std::string rand_expr_text(Rng& rng, const std::vector<std::string>& branches, int depth) {
    auto leaf = [&]() -> std::string {
        if (rng() % 3 == 0) return std::to_string(static_cast<int>(rng() % 7)) + ".5";
        return branches[rng() % branches.size()];
    };
    if (depth <= 0) return leaf();
    switch (rng() % 10) {
    case 0: return "(" + rand_expr_text(rng, branches, depth - 1) + ")";
    case 1: return "-" + rand_expr_text(rng, branches, depth - 1);
    case 2: return "sqrt(abs(" + rand_expr_text(rng, branches, depth - 1) + "))";
    case 3:
        return "min(" + rand_expr_text(rng, branches, depth - 1) + ", " +
               rand_expr_text(rng, branches, depth - 1) + ")";
    case 4:
        return rand_expr_text(rng, branches, depth - 1) + " && " +
               rand_expr_text(rng, branches, depth - 1);
    case 5:
        return rand_expr_text(rng, branches, depth - 1) + " || " +
               rand_expr_text(rng, branches, depth - 1);
    case 6:
        return rand_expr_text(rng, branches, depth - 1) + " > " +
               rand_expr_text(rng, branches, depth - 1);
    case 7:
        return rand_expr_text(rng, branches, depth - 1) + " * " +
               rand_expr_text(rng, branches, depth - 1);
    case 8:
        return rand_expr_text(rng, branches, depth - 1) + " - " +
               rand_expr_text(rng, branches, depth - 1);
    default:
        return rand_expr_text(rng, branches, depth - 1) + " + " +
               rand_expr_text(rng, branches, depth - 1);
    }
}

struct ScalarTree {
    std::unique_ptr<Container> container;
    std::vector<DynamicRecord> rows;
    std::optional<Tree> tree;
};

ScalarTree make_scalar_tree(const test::TempDir& dir, Rng& rng, const std::string& stem,
                            int entries) {
    SchemaRegistry reg;
    reg.register_type(TypeDescriptor::make("Row", 1,
                                           {FieldDescriptor::scalar("a", FieldKind::Float64),
                                            FieldDescriptor::scalar("b", FieldKind::Float64),
                                            FieldDescriptor::scalar("c", FieldKind::Int64)}));
    ScalarTree out;
    auto path = dir.file(stem + ".nrt");
    {
        RolloverSink sink(Container::create(path));
        TreeWriter writer(sink, "t", reg.get("Row", 1), 1, reg, 16);
        for (int i = 0; i < entries; ++i) {
            DynamicRecord r("Row", 1);
            r.set("a", Value(test::rand_double(rng)));
            r.set("b", Value(test::rand_double(rng)));
            r.set("c", Value(test::rand_int(rng, -2, 2)));
            out.rows.push_back(r);
            writer.fill(r);
        }
        writer.finalize();
        sink.finalize();
    }
    out.container = Container::open(path);
    out.tree.emplace(Tree::open(*out.container, "t"));
    return out;
}

} // namespace

int main() {
    Harness h;
    test::TempDir dir("acceptance");

    // 1. Self-description round-trip: randomized (descriptor, record) pairs
    // written, then read back through a fresh open with no writer-side
    // state. 1000 pairs, 100% equality, under 30 s.
    h.run("self-description round-trip", [&] {
        auto t0 = Clock::now();
        const std::size_t kPairs = 1000;
        std::size_t written = 0, matched = 0;
        const std::size_t kFiles = 25;
        for (std::size_t file = 0; file < kFiles; ++file) {
            auto fam = test::make_schema_family(1000 + file);
            Rng rng(77 * (file + 1));
            auto path = dir.file("sd" + std::to_string(file) + ".nrt");
            std::vector<DynamicRecord> originals;
            {
                auto c = Container::create(path);
                for (std::size_t i = 0; i < kPairs / kFiles; ++i) {
                    auto rec = test::rand_record(rng, fam.root_desc(), fam.registry);
                    c->put("r" + std::to_string(i), rec, fam.registry);
                    originals.push_back(std::move(rec));
                    ++written;
                }
                c->finalize();
            }
            auto c = Container::open(path); // fresh process state: file only
            for (std::size_t i = 0; i < originals.size(); ++i) {
                if (c->get("r" + std::to_string(i)) == originals[i]) ++matched;
            }
        }
        double secs = seconds_since(t0);
        expect(written == kPairs, "wrote " + std::to_string(written));
        expect(matched == kPairs, "only " + std::to_string(matched) + " matched");
        expect(secs < 30.0, "too slow: " + std::to_string(secs) + "s");
        return fmt_count(matched, kPairs, secs);
    });

    // 2. Emulated read: the same corpus decoded via read_emulated against
    // the files' own descriptors; no writer-side binding anywhere.
    h.run("emulated read without native bindings", [&] {
        auto t0 = Clock::now();
        std::size_t matched = 0, total = 0;
        const std::size_t kFiles = 25;
        for (std::size_t file = 0; file < kFiles; ++file) {
            auto fam = test::make_schema_family(1000 + file);
            Rng rng(77 * (file + 1));
            auto path = dir.file("sd" + std::to_string(file) + ".nrt");
            auto c = Container::open(path);
            auto raw = FileStorage::open(path);
            for (const auto& key : c->list_keys()) {
                auto block = raw->read_block(key.offset, key.length);
                ByteReader r(block);
                expect(r.u8() == kValueTag, "key does not point at a value record");
                uint64_t len = r.u64();
                auto payload = r.raw(len);
                const TypeDescriptor* desc = c->find_type(key.type_name, key.type_version);
                expect(desc != nullptr, "descriptor missing from file");
                DynamicRecord rec = read_emulated(payload, *desc, c->schemas());
                auto expected = test::rand_record(rng, fam.root_desc(), fam.registry);
                ++total;
                if (rec == expected) ++matched;
            }
        }
        expect(matched == total && total == 1000,
               std::to_string(matched) + "/" + std::to_string(total));
        return fmt_count(matched, total, seconds_since(t0));
    });

    // 3. Rollover naming and integrity: 64 KiB threshold, at least three
    // files named exactly f.nrt, f_1.nrt, f_2.nrt, chained read complete.
    h.run("rollover naming and chained integrity", [&] {
        SchemaRegistry reg;
        reg.register_type(TypeDescriptor::make(
            "S", 1,
            {FieldDescriptor::scalar("i", FieldKind::Int64),
             FieldDescriptor::scalar("text", FieldKind::String)}));
        auto base = dir.file("f.nrt");
        std::vector<DynamicRecord> originals;
        std::vector<std::string> paths;
        {
            RolloverSink sink(Container::create(base, {uint64_t{65536}, ProcessTag::current()}));
            TreeWriter writer(sink, "t", reg.get("S", 1), 1, reg, 64);
            int i = 0;
            while (sink.files_written() < 3 || i < 500) {
                DynamicRecord rec("S", 1);
                rec.set("i", Value(static_cast<int64_t>(i)));
                rec.set("text", Value(std::string(64, 'x')));
                writer.fill(rec);
                originals.push_back(std::move(rec));
                ++i;
            }
            writer.finalize();
            sink.finalize();
            paths = sink.family_paths();
        }
        expect(paths.size() >= 3, "only " + std::to_string(paths.size()) + " files");
        expect(paths[0] == dir.file("f.nrt"), "first file renamed: " + paths[0]);
        expect(paths[1] == dir.file("f_1.nrt"), "unexpected successor: " + paths[1]);
        expect(paths[2] == dir.file("f_2.nrt"), "unexpected successor: " + paths[2]);

        auto chain = ContainerChain::open_family(base);
        expect(chain.parts() >= 3, "chain too short");
        Tree tree = Tree::open(chain, "t");
        expect(tree.entries() == originals.size(), "entry count changed");
        for (uint64_t i = 0; i < tree.entries(); ++i) {
            if (!(tree.get_entry(i) == originals[i]))
                fail_check("entry " + std::to_string(i) + " differs");
        }
        return std::to_string(chain.parts()) + " files, " + std::to_string(originals.size()) +
               " entries, zero loss";
    });

    // 4. Split-level invariance over 50 randomized nested datasets at
    // levels {0,1,3}: identical get_entry sequences and bin-identical
    // draw() histograms.
    h.run("split-level invariance (50 datasets, levels 0/1/3)", [&] {
        auto t0 = Clock::now();
        const int kDatasets = 50;
        for (int ds = 0; ds < kDatasets; ++ds) {
            auto fam = test::make_schema_family(3000 + static_cast<uint64_t>(ds));
            Rng rng(13 * (ds + 1));
            std::vector<DynamicRecord> data;
            for (int i = 0; i < 10; ++i)
                data.push_back(test::rand_record(rng, fam.root_desc(), fam.registry));

            // expressions over fields every family has; plus one collection
            // member when the element type offers a numeric field
            std::vector<std::string> exprs{"n*2 + items_n", "w"};
            const TypeDescriptor* elem = nullptr;
            for (const auto& f : fam.root_desc().fields())
                if (f.name == "items") elem = fam.registry.find_latest(f.element);
            if (elem) {
                for (const auto& f : elem->fields()) {
                    if (f.kind == FieldKind::Int64 || f.kind == FieldKind::Float64 ||
                        f.kind == FieldKind::Bool) {
                        exprs.push_back("items." + f.name);
                        break;
                    }
                }
            }

            std::vector<std::vector<DynamicRecord>> seqs;
            std::vector<std::vector<Hist1D>> hists;
            for (uint32_t level : {0u, 1u, 3u}) {
                auto path =
                    dir.file("inv" + std::to_string(ds) + "_" + std::to_string(level) + ".nrt");
                {
                    RolloverSink sink(Container::create(path));
                    TreeWriter writer(sink, "t", fam.root_desc(), level, fam.registry, 4);
                    for (const auto& rec : data) writer.fill(rec);
                    writer.finalize();
                    sink.finalize();
                }
                auto c = Container::open(path);
                Tree tree = Tree::open(*c, "t");
                std::vector<DynamicRecord> seq;
                for (uint64_t i = 0; i < tree.entries(); ++i) seq.push_back(tree.get_entry(i));
                seqs.push_back(std::move(seq));
                std::vector<Hist1D> hs;
                for (const auto& e : exprs)
                    hs.push_back(draw(tree, e, "items_n >= 0", HistSpec::fixed(24, -600, 600)));
                hists.push_back(std::move(hs));
            }
            for (std::size_t lv = 1; lv < seqs.size(); ++lv) {
                expect(seqs[0] == seqs[lv], "dataset " + std::to_string(ds) +
                                                ": get_entry differs at level index " +
                                                std::to_string(lv));
                for (std::size_t e = 0; e < hists[0].size(); ++e) {
                    expect(hists[0][e].contents() == hists[lv][e].contents() &&
                               hists[0][e].underflow() == hists[lv][e].underflow() &&
                               hists[0][e].overflow() == hists[lv][e].overflow(),
                           "dataset " + std::to_string(ds) + ": draw bins differ");
                }
            }
            expect(seqs[0] == data, "round trip changed the records");
        }
        return fmt_count(kDatasets, kDatasets, seconds_since(t0));
    });

    // 5. Ref semantics: absent before load, the target after; one stored
    // payload for a target referenced five times.
    h.run("ref laziness and duplicate avoidance", [&] {
        SchemaRegistry schemas;
        schemas.register_type(
            TypeDescriptor::make("Point", 1, {FieldDescriptor::scalar("x", FieldKind::Float64)}));
        schemas.register_type(
            TypeDescriptor::make("Holder", 1, {FieldDescriptor::scalar("r", FieldKind::Ref)}));

        RefRegistry writer_refs;
        DynamicRecord target("Point", 1);
        target.set("x", Value(27.5));
        writer_refs.assign_uid(target);

        auto path = dir.file("refs.nrt");
        {
            auto c = Container::create(path);
            for (int i = 0; i < 5; ++i) {
                DynamicRecord holder("Holder", 1);
                holder.set("r", Value(*target.uid));
                c->put("holder" + std::to_string(i), holder, schemas);
            }
            c->put("target", target, schemas);
            c->finalize();
        }

        auto c = Container::open(path);
        int target_payloads = 0, value_records = 0;
        for (const auto& key : c->list_keys()) {
            ++value_records;
            if (key.type_name == "Point") ++target_payloads;
        }
        expect(target_payloads == 1,
               std::to_string(target_payloads) + " stored payloads of the shared target");
        expect(value_records == 7, "unexpected record count"); // 5 holders + target + uid map

        RefRegistry reader;
        c->attach_ref_registry(&reader);
        Ref ref = Ref::to(target);
        expect(!reader.resolve(ref).has_value(), "resolved before the target was read");
        auto loaded = c->get("target");
        expect(loaded.uid.has_value() && *loaded.uid == *target.uid, "identity lost in the file");
        auto resolved = reader.resolve(ref);
        expect(resolved.has_value(), "resolve failed after the read");
        expect(resolved->at("x").as_f64() == 27.5, "wrong target back");
        return std::string("absent -> present; 1 payload for 5 referrers");
    });

    // 6. Histogram algebra: merge vs concatenated fills at 1e-9 relative,
    // by-label merge on permuted orders, exact cumulative stacks.
    h.run("histogram algebra", [&] {
        Rng rng(606);
        Hist1D h1("h1", 32, -4, 4);
        Hist1D h2("h2", 32, -4, 4);
        Hist1D whole("whole", 32, -4, 4);
        for (int i = 0; i < 4000; ++i) {
            double x = test::rand_double(rng) / 64.0;
            double w = std::abs(test::rand_double(rng)) / 256.0 + 0.25;
            (i % 2 ? h1 : h2).fill(x, w);
            whole.fill(x, w);
        }
        std::vector<Hist1D> parts{h1, h2};
        Hist1D merged = merge(parts);
        for (uint32_t b = 0; b < 32; ++b) {
            double want = whole.content(b);
            double got = merged.content(b);
            double rel = want == 0.0 ? std::abs(got) : std::abs(got - want) / std::abs(want);
            expect(rel <= 1e-9, "bin " + std::to_string(b) + " off by " + std::to_string(rel));
        }
        expect(merged.entries() == whole.entries(), "entry counts differ");

        Hist1D la("la"), lb("lb");
        la.fill_label("e");
        la.fill_label("mu", 2);
        lb.fill_label("tau", 3);
        lb.fill_label("e", 4);
        std::vector<Hist1D> fwd{la, lb}, rev{lb, la};
        Hist1D m1 = merge(fwd), m2 = merge(rev);
        for (const char* l : {"e", "mu", "tau"})
            expect(m1.label_content(l) == m2.label_content(l),
                   std::string("label ") + l + " differs");
        expect(m1.label_content("e") == 5.0, "by-label sum wrong");

        HistStack stack("s");
        Hist1D sa("sa", 4, 0, 4), sb("sb", 4, 0, 4), sc("sc", 4, 0, 4);
        sa.fill(0.5);
        sb.fill(0.5, 2);
        sb.fill(1.5);
        sc.fill(3.5, 4);
        stack.add(sa);
        stack.add(sb);
        stack.add(sc);
        auto totals = stack_totals(stack);
        expect(totals[0].content(0) == 1.0 && totals[1].content(0) == 3.0 &&
                   totals[2].content(0) == 3.0 && totals[1].content(1) == 1.0 &&
                   totals[2].content(3) == 4.0,
               "cumulative sums wrong");
        auto nostack = stack_totals(stack, true);
        expect(nostack[2].content(3) == 4.0 && nostack[1].content(0) == 2.0,
               "nostack altered members");
        return std::string("merge 1e-9, labels by name, stacks exact");
    });

    // 7. Lazy reads: 200 randomized expressions; per entry the read-set
    // equals the short-circuit-adjusted reference set, with zero extra
    // basket loads.
    h.run("lazy branch reads (200 expressions)", [&] {
        auto t0 = Clock::now();
        Rng rng(707);
        auto st = make_scalar_tree(dir, rng, "lazy", 24);
        const std::vector<std::string> branches{"a", "b", "c"};
        const auto& fns = FunctionRegistry::builtin();

        int checked = 0;
        while (checked < 200) {
            std::string text = rand_expr_text(rng, branches, 3);
            Expr e = parse_expr(text);
            std::set<std::string> statically_referenced;
            collect_branch_refs(e, statically_referenced);
            if (statically_referenced.empty()) continue;

            auto cursor = st.tree->make_cursor();
            std::set<std::string> run_reads;
            for (uint64_t i = 0; i < st.tree->entries(); ++i) {
                std::set<std::string> got, want;
                std::map<std::string, Value> cache;
                EvalContext ctx;
                ctx.tree = &*st.tree;
                ctx.entry = i;
                ctx.cursor = &cursor;
                ctx.functions = &fns;
                ctx.read_set = &got;
                ctx.value_cache = &cache;
                double value = eval(e, ctx);
                double expected = test::oracle_eval(e, st.rows[i], std::nullopt, fns, &want);
                bool same = (std::isnan(value) && std::isnan(expected)) || value == expected;
                expect(same, text + ": value differs at entry " + std::to_string(i));
                expect(got == want, text + ": read-set differs at entry " + std::to_string(i));
                run_reads.insert(got.begin(), got.end());
            }
            for (const auto& [branch, loads] : cursor.loads_by_branch()) {
                expect(loads == 0 || run_reads.count(branch) == 1,
                       text + ": extra loads of '" + branch + "'");
            }
            ++checked;
        }
        return fmt_count(static_cast<std::size_t>(checked), 200, seconds_since(t0));
    });

    // 8. Draw oracle equivalence on 200 randomized (tree, expression,
    // selection) triples against a full-materialization interpreter.
    h.run("draw oracle equivalence (200 triples)", [&] {
        auto t0 = Clock::now();
        Rng rng(808);
        const std::vector<std::string> branches{"a", "b", "c"};
        const auto& fns = FunctionRegistry::builtin();

        int checked = 0;
        int tree_round = 0;
        while (checked < 200) {
            auto st = make_scalar_tree(dir, rng, "drw" + std::to_string(tree_round++), 30);
            for (int k = 0; k < 10 && checked < 200; ++k, ++checked) {
                std::string expr_text = rand_expr_text(rng, branches, 3);
                std::string sel_text =
                    (rng() % 3 == 0) ? std::string("1") : rand_expr_text(rng, branches, 2);
                Hist1D got = draw(*st.tree, expr_text, sel_text, HistSpec::fixed(25, -12, 12));

                Expr e = parse_expr(expr_text);
                Expr s = parse_expr(sel_text);
                Hist1D want("oracle", 25, -12, 12);
                for (const auto& row : st.rows) {
                    double w = test::oracle_eval(s, row, std::nullopt, fns, nullptr);
                    if (w == 0.0 || std::isnan(w)) continue;
                    double x = test::oracle_eval(e, row, std::nullopt, fns, nullptr);
                    if (std::isnan(x)) continue;
                    want.fill(x, w);
                }
                expect(got.contents() == want.contents() && got.underflow() == want.underflow() &&
                           got.overflow() == want.overflow() && got.entries() == want.entries(),
                       expr_text + " / " + sel_text + ": bins differ");
            }
        }
        return fmt_count(static_cast<std::size_t>(checked), 200, seconds_since(t0));
    });

    // 9. Plugin config: the documented two-entry block, its resolutions,
    // and a non-matching uri.
    h.run("plugin config block and resolution", [&] {
        const char* config =
            "# base class   regexp   plugin class   plugin lib\n"
            "  ctor or factory\n"
            "Plugin.TFile: ^rfio:  TRFIOFile   RFIO\n"
            "  \"TRFIOFile(const char*,Option_t*,const char*,Int_t)\"\n"
            "+Plugin.TFile: ^dcache:TDCacheFile DCache\n"
            "  \"TDCacheFile(const char*,Option_t*,const char*,Int_t)\"\n";
        auto specs = load_config(config);
        expect(specs.size() == 2, std::to_string(specs.size()) + " specs parsed");
        expect(specs[0].pattern == "^rfio:" && specs[0].handler == "TRFIOFile" &&
                   specs[0].library == "RFIO",
               "first entry wrong");
        expect(specs[1].pattern == "^dcache:" && specs[1].handler == "TDCacheFile" &&
                   specs[1].library == "DCache",
               "second entry wrong");

        PluginRegistry reg;
        reg.load(config);
        expect(reg.resolve("TFile", "rfio:/castor/data.nrt").handler == "TRFIOFile",
               "rfio resolution wrong");
        expect(reg.resolve("TFile", "dcache:/pnfs/data.nrt").handler == "TDCacheFile",
               "dcache resolution wrong");
        try {
            reg.resolve("TFile", "http://host/file");
            fail_check("unmatched uri resolved");
        } catch (const Error& e) {
            expect(e.code() == Errc::no_match, "wrong error for unmatched uri");
        }
        return std::string("2 specs; rfio/dcache resolve; NoMatch otherwise");
    });

    // 10. Scheduler properties: exactly-once + termination over 1000
    // scenarios in < 60 s, zero remote in the balanced all-local case,
    // 20 +- 1 / 10 -+ 1 split at 2:1 speeds, byte-identical traces.
    h.run("scheduler properties (1000 scenarios)", [&] {
        auto t0 = Clock::now();
        for (uint64_t seed = 0; seed < 1000; ++seed) {
            auto [workers, packets] = scenario_gen(seed, 1 + seed % 8, 1 + seed % 37,
                                                   (seed % 11) / 10.0, seed % 2 == 1);
            auto result = run(workers, packets, seed);
            expect(result.completions.size() == packets.size(),
                   "seed " + std::to_string(seed) + ": lost packets");
            std::set<int64_t> seen;
            for (const auto& c : result.completions) {
                expect(seen.insert(c.packet).second,
                       "seed " + std::to_string(seed) + ": duplicate completion");
            }
        }
        double secs = seconds_since(t0);
        expect(secs < 60.0, "too slow: " + std::to_string(secs) + "s");

        // balanced all-local: equal speeds, one host each, equal counts
        std::vector<WorkerSim> workers;
        for (int i = 0; i < 4; ++i) workers.push_back({i, 1.0, 2.0});
        std::vector<PacketTask> packets;
        for (int i = 0; i < 40; ++i) packets.push_back({i, 10, {i % 4}});
        auto balanced = run(workers, packets);
        expect(balanced.summary.remote == 0, "remote assignments in the balanced scenario");

        std::vector<WorkerSim> pair{{0, 2.0, 2.0}, {1, 1.0, 2.0}};
        std::vector<PacketTask> thirty;
        for (int i = 0; i < 30; ++i) thirty.push_back({i, 10, {}});
        auto split_run = run(pair, thirty);
        auto fast = split_run.summary.per_worker.at(0).packets;
        auto slow = split_run.summary.per_worker.at(1).packets;
        expect(fast >= 19 && fast <= 21 && slow >= 9 && slow <= 11,
               "split " + std::to_string(fast) + "/" + std::to_string(slow));

        auto [w1, p1] = scenario_gen(4242, 5, 60, 0.6, true);
        auto [w2, p2] = scenario_gen(4242, 5, 60, 0.6, true);
        expect(trace_csv(run(w1, p1, 4242).trace) == trace_csv(run(w2, p2, 4242).trace),
               "same seed produced different traces");
        return fmt_count(1000, 1000, secs) + "; balanced remote=0; split " +
               std::to_string(fast) + "/" + std::to_string(slow);
    });

    // 11. XML interchange: binary -> XML -> binary equality across the
    // randomized corpus, importing into empty registries.
    h.run("XML interchange losslessness", [&] {
        auto t0 = Clock::now();
        std::size_t checked = 0;
        for (uint64_t seed = 0; seed < 50; ++seed) {
            auto fam = test::make_schema_family(5000 + seed);
            Rng rng(99 * (seed + 1));
            for (int i = 0; i < 20; ++i) {
                auto rec = test::rand_record(rng, fam.root_desc(), fam.registry);
                auto before = encode_record(rec, fam.registry);
                SchemaRegistry empty;
                auto back = import_xml(record_to_xml(rec, fam.registry, true), empty);
                expect(back == rec, "value changed through XML");
                expect(encode_record(back, empty) == before, "bytes changed through XML");
                ++checked;
            }
        }
        return fmt_count(checked, checked, seconds_since(t0));
    });

    // 12. 64-bit offsets: a key table entry beyond 2^32 survives encode /
    // decode (capacity check only).
    h.run("64-bit key offsets", [&] {
        ObjectKey key;
        key.name = "huge";
        key.cycle = 1;
        key.type_name = "T";
        key.type_version = 1;
        key.offset = (uint64_t{1} << 33) + 7;
        key.length = (uint64_t{1} << 32) + 11;
        ByteWriter w;
        encode_key(w, key);
        ByteReader r(w.data());
        ObjectKey back = decode_key(r);
        expect(back == key, "key table entry mangled");
        expect(back.offset > (uint64_t{1} << 32) && back.length > (uint64_t{1} << 32),
               "offsets truncated");
        return std::string("offset 2^33+7 and length 2^32+11 round-trip");
    });

    std::printf("%d/%d criteria passed\n", h.index - h.failures, h.index);
    return h.failures == 0 ? 0 : 1;
}
