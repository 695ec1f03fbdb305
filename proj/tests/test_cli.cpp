#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "nrt/container.hpp"
#include "nrt/hist.hpp"
#include "nrt/tree.hpp"
#include "nrt/xml.hpp"
#include "support.hpp"

using namespace nrt;

namespace {

struct CliResult {
    int exit_code;
    std::string out;
    std::string err;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CliResult run_cli(const test::TempDir& dir, const std::string& args) {
    static int n = 0;
    std::string out_path = dir.file("cli_out" + std::to_string(n));
    std::string err_path = dir.file("cli_err" + std::to_string(n));
    ++n;
    std::string cmd = std::string(NRT_CLI_PATH) + " " + args + " > " + out_path + " 2> " + err_path;
    int status = std::system(cmd.c_str());
    int exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return {exit_code, slurp(out_path), slurp(err_path)};
}

// one tree of Row{x,y} plus a couple of keyed objects
std::string make_sample(const test::TempDir& dir) {
    SchemaRegistry reg;
    reg.register_type(TypeDescriptor::make("Row", 1,
                                           {FieldDescriptor::scalar("x", FieldKind::Float64),
                                            FieldDescriptor::scalar("y", FieldKind::Float64)}));
    auto path = dir.file("sample.nrt");
    RolloverSink sink(Container::create(path));
    TreeWriter writer(sink, "rows", reg.get("Row", 1), 1, reg);
    for (int i = 1; i <= 3; ++i) {
        DynamicRecord r("Row", 1);
        r.set("x", Value(static_cast<double>(i)));
        r.set("y", Value(static_cast<double>(-i)));
        writer.fill(r);
    }
    writer.finalize();

    DynamicRecord one("Row", 1);
    one.set("x", Value(9.0));
    one.set("y", Value(8.0));
    sink.put("h", one, reg);
    sink.put("h", one, reg); // second cycle
    sink.finalize();
    return path;
}

} // namespace

TEST_CASE("ls lists name;cycle;type;version;bytes") {
    test::TempDir dir("cli");
    auto path = make_sample(dir);
    auto r = run_cli(dir, "ls " + path);
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("h;1;Row;1;") != std::string::npos);
    CHECK(r.out.find("h;2;Row;1;") != std::string::npos);
    CHECK(r.out.find("rows;1;nrt.TreeMeta;1;") != std::string::npos);

    SUBCASE("empty container lists nothing") {
        auto empty = dir.file("empty.nrt");
        Container::create(empty)->finalize();
        auto re = run_cli(dir, "ls " + empty);
        CHECK(re.exit_code == 0);
        CHECK(re.out.empty());
    }
    SUBCASE("missing files exit 2 with a message on stderr") {
        auto rm = run_cli(dir, "ls " + dir.file("nope.nrt"));
        CHECK(rm.exit_code == 2);
        CHECK(rm.out.empty());
        CHECK_FALSE(rm.err.empty());
    }
    SUBCASE("tsv variant swaps the separator") {
        auto rt = run_cli(dir, "ls --format=tsv " + path);
        CHECK(rt.exit_code == 0);
        CHECK(rt.out.find("h\t1\tRow\t1\t") != std::string::npos);
    }
    SUBCASE("unknown formats are rejected") {
        auto rf = run_cli(dir, "ls --format=yaml " + path);
        CHECK(rf.exit_code == 2);
    }
}

TEST_CASE("inspect prints the header and schema inventory") {
    test::TempDir dir("cli");
    auto path = make_sample(dir);
    auto r = run_cli(dir, "inspect " + path);
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("format: 1") != std::string::npos);
    CHECK(r.out.find("process: ") != std::string::npos);
    CHECK(r.out.find("Row v1 checksum") != std::string::npos);
}

TEST_CASE("schema dumps descriptors, optionally filtered") {
    test::TempDir dir("cli");
    auto path = make_sample(dir);
    auto r = run_cli(dir, "schema " + path + " --type Row");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("Row v1") != std::string::npos);
    CHECK(r.out.find("x: Float64") != std::string::npos);
    CHECK(r.out.find("nrt.TreeMeta") == std::string::npos);
}

TEST_CASE("draw renders ASCII bars with one row per bin") {
    test::TempDir dir("cli");
    auto path = make_sample(dir);

    auto r = run_cli(dir, "draw " + path + " rows \"x*2\" --bins 3 --min 2 --max 8");
    CHECK(r.exit_code == 0);
    // rows for values 2,4,6: one count each
    CHECK(r.out.find("[2, 4)") != std::string::npos);
    CHECK(r.out.find("[4, 6)") != std::string::npos);
    CHECK(r.out.find("[6, 8)") != std::string::npos);
    CHECK(r.out.find("entries=3") != std::string::npos);
    // bars are proportional: equal counts, equal bars of 60 columns
    CHECK(r.out.find(std::string(60, '#')) != std::string::npos);

    SUBCASE("selection trims the entry count") {
        auto rs = run_cli(dir, "draw " + path + " rows \"x*2\" --select \"x>1\" --bins 3 --min 2 --max 8");
        CHECK(rs.exit_code == 0);
        CHECK(rs.out.find("entries=2") != std::string::npos);
    }
    SUBCASE("bad expressions exit 3 with the offset") {
        auto rb = run_cli(dir, "draw " + path + " rows \"x+\"");
        CHECK(rb.exit_code == 3);
        CHECK(rb.err.find("ParseError") != std::string::npos);
    }
    SUBCASE("missing trees exit 2") {
        auto rm = run_cli(dir, "draw " + path + " absent \"x\"");
        CHECK(rm.exit_code == 2);
    }
    SUBCASE("--out writes the histogram record as XML") {
        auto out = dir.file("h.xml");
        auto rx = run_cli(dir, "draw " + path + " rows \"x\" --bins 4 --min 0 --max 4 --out " + out);
        CHECK(rx.exit_code == 0);
        SchemaRegistry reg;
        auto h = Hist1D::from_record(import_xml(slurp(out), reg));
        CHECK(h.entries() == 3);
        CHECK(h.nbins() == 4);
    }
}

TEST_CASE("map runs a named function over branch values") {
    test::TempDir dir("cli");
    auto path = make_sample(dir);
    auto r = run_cli(dir, "map " + path + " rows abs y --bins 4 --min 0 --max 4");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("entries=3") != std::string::npos);

    auto rb = run_cli(dir, "map " + path + " rows nosuch y");
    CHECK(rb.exit_code == 3);
}

TEST_CASE("export-xml and import-xml invert each other end to end") {
    test::TempDir dir("cli");
    auto path = make_sample(dir);

    auto r = run_cli(dir, "export-xml " + path + " h");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("<object type=\"Row\" version=\"1\">") != std::string::npos);

    auto xml_path = dir.file("h.xml");
    {
        std::ofstream out(xml_path);
        out << r.out;
    }
    auto target = dir.file("fresh.nrt");
    auto ri = run_cli(dir, "import-xml " + target + " " + xml_path + " --name imported");
    CHECK(ri.exit_code == 0);

    auto c = Container::open(target);
    auto rec = c->get("imported");
    CHECK(rec.at("x").as_f64() == 9.0);

    SUBCASE("cycle selection picks older versions") {
        auto r1 = run_cli(dir, "export-xml " + path + " h --cycle 1");
        CHECK(r1.exit_code == 0);
    }
    SUBCASE("absent keys exit 2") {
        auto rm = run_cli(dir, "export-xml " + path + " nothing");
        CHECK(rm.exit_code == 2);
    }
}

TEST_CASE("merge-hist sums histogram XML files") {
    test::TempDir dir("cli");
    SchemaRegistry reg;
    Hist1D h1("a", 4, 0, 4);
    h1.fill(1);
    Hist1D h2("b", 4, 0, 4);
    h2.fill(2);
    h2.fill(3.5);
    auto p1 = dir.file("h1.xml");
    auto p2 = dir.file("h2.xml");
    {
        std::ofstream(p1) << record_to_xml(h1.to_record(reg), reg);
        std::ofstream(p2) << record_to_xml(h2.to_record(reg), reg);
    }
    auto out = dir.file("merged.xml");
    auto r = run_cli(dir, "merge-hist " + out + " " + p1 + " " + p2);
    CHECK(r.exit_code == 0);

    SchemaRegistry reg2;
    auto merged = Hist1D::from_record(import_xml(slurp(out), reg2));
    CHECK(merged.entries() == 3);
    CHECK(merged.content(1) == 1.0);
    CHECK(merged.content(2) == 1.0);
    CHECK(merged.content(3) == 1.0);
}

TEST_CASE("simulate prints the summary and optional trace deterministically") {
    test::TempDir dir("cli");
    auto r = run_cli(dir, "simulate --workers 1 --packets 4");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("makespan=40\n") != std::string::npos);
    CHECK(r.out.find("local=4\n") != std::string::npos);
    CHECK(r.out.find("remote=0\n") != std::string::npos);

    SUBCASE("identical seeds, identical bytes") {
        auto t1 = dir.file("t1.csv");
        auto t2 = dir.file("t2.csv");
        auto r1 = run_cli(dir, "simulate --workers 3 --packets 17 --locality 0.5 --seed 9 --trace " + t1);
        auto r2 = run_cli(dir, "simulate --workers 3 --packets 17 --locality 0.5 --seed 9 --trace " + t2);
        CHECK(r1.exit_code == 0);
        CHECK(r1.out == r2.out);
        CHECK(slurp(t1) == slurp(t2));
        CHECK(slurp(t1).rfind("time,kind,worker,packet,local\n", 0) == 0);
    }
    SUBCASE("balanced full locality has zero remote assignments") {
        auto rl = run_cli(dir, "simulate --workers 4 --packets 40 --locality 1 --seed 3");
        CHECK(rl.exit_code == 0);
        CHECK(rl.out.find("remote=0\n") != std::string::npos);
    }
    SUBCASE("bad flags exit 2") {
        auto rb = run_cli(dir, "simulate --workers 0 --packets 4");
        CHECK(rb.exit_code == 2);
        auto ru = run_cli(dir, "simulate --bogus");
        CHECK(ru.exit_code == 2);
    }
}

TEST_CASE("unknown verbs are rejected with usage text") {
    test::TempDir dir("cli");
    auto r = run_cli(dir, "frobnicate");
    CHECK(r.exit_code == 2);
    CHECK_FALSE(r.err.empty());
}
