// Command-line front end: inspect containers, dump schemas, draw
// expressions as ASCII histograms, merge histograms, move records between
// binary and XML form, and run scheduler simulations.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "nrt/container.hpp"
#include "nrt/hist.hpp"
#include "nrt/plugin.hpp"
#include "nrt/query.hpp"
#include "nrt/sched.hpp"
#include "nrt/tree.hpp"
#include "nrt/xml.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;  // environment / input problems
constexpr int kExitExpr = 3;   // user expression problems

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) nrt::fail(nrt::Errc::io_failure, "cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) nrt::fail(nrt::Errc::io_failure, "cannot write '" + path + "'");
    out << text;
}

nrt::PluginRegistry make_registry(const std::string& plugins_path) {
    auto registry = nrt::PluginRegistry::with_builtins();
    std::string path = plugins_path;
    if (path.empty()) {
        if (const char* env = std::getenv("NRT_PLUGINS")) path = env;
    }
    if (!path.empty()) registry.load(read_file(path));
    return registry;
}

std::string fmt(double v) { return nrt::format_double(v); }

void render_hist(std::ostream& os, const nrt::Hist1D& h) {
    os << h.name() << ": entries=" << h.entries() << " under=" << fmt(h.underflow())
       << " over=" << fmt(h.overflow()) << "\n";
    double max_w = 0.0;
    for (uint32_t i = 0; i < h.nbins(); ++i) max_w = std::max(max_w, h.content(i));

    std::vector<std::string> heads(h.nbins());
    std::size_t head_width = 0;
    for (uint32_t i = 0; i < h.nbins(); ++i) {
        if (h.label_mode()) {
            heads[i] = h.labels()[i];
        } else {
            double lo = h.lo() + (h.hi() - h.lo()) * i / h.nbins();
            double hi = h.lo() + (h.hi() - h.lo()) * (i + 1) / h.nbins();
            heads[i] = "[" + fmt(lo) + ", " + fmt(hi) + ")";
        }
        head_width = std::max(head_width, heads[i].size());
    }
    for (uint32_t i = 0; i < h.nbins(); ++i) {
        std::string bar;
        if (max_w > 0) bar.assign(static_cast<std::size_t>(std::lround(60.0 * h.content(i) / max_w)), '#');
        os << heads[i] << std::string(head_width - heads[i].size(), ' ') << " "
           << fmt(h.content(i)) << " |" << bar << "\n";
    }
}

struct UriReader {
    std::unique_ptr<nrt::Container> single;
    std::optional<nrt::ContainerChain> chain;

    const nrt::ObjectSource& source() const {
        if (chain) return *chain;
        return *single;
    }
};

// Local files with rollover successors open as a chain so trees spanning
// several files read whole.
UriReader open_reader(const nrt::PluginRegistry& registry, const std::string& uri) {
    UriReader r;
    if (!nrt::has_uri_scheme(uri) || uri.rfind("local:", 0) == 0) {
        std::string path = uri.rfind("local:", 0) == 0 ? uri.substr(6) : uri;
        if (std::filesystem::exists(nrt::next_overflow_name(path, 1))) {
            r.chain = nrt::ContainerChain::open_family(path);
            return r;
        }
    }
    r.single = registry.open_any(uri);
    return r;
}

int cmd_ls(const nrt::ObjectSource& source, bool tsv) {
    for (const auto& key : source.list_keys()) {
        char sep = tsv ? '\t' : ';';
        std::cout << key.name << sep << key.cycle << sep << key.type_name << sep << key.type_version
                  << sep << key.length << "\n";
    }
    return kExitOk;
}

int cmd_inspect(const UriReader& reader) {
    auto describe = [](const nrt::Container& c) {
        std::cout << "file: " << c.path() << "\n"
                  << "format: " << c.header().format_version << "\n"
                  << "process: " << c.header().process_tag.hex() << "\n"
                  << "keys: " << c.list_keys().size() << "\n"
                  << "size: " << c.physical_size() << "\n";
        std::cout << "schemas:\n";
        for (const auto* d : c.schemas().all()) {
            std::cout << "  " << d->name() << " v" << d->version() << " checksum " << d->checksum()
                      << " (" << d->fields().size() << " fields)\n";
        }
    };
    if (reader.chain) {
        for (std::size_t i = 0; i < reader.chain->parts(); ++i) {
            if (i) std::cout << "\n";
            describe(reader.chain->part(i));
        }
    } else {
        describe(*reader.single);
    }
    return kExitOk;
}

int cmd_schema(const nrt::ObjectSource& source, const std::string& type) {
    for (const auto* d : source.all_types()) {
        if (!type.empty() && d->name() != type) continue;
        std::cout << d->name() << " v" << d->version() << " checksum " << d->checksum();
        if (!d->base().empty()) std::cout << " base " << d->base();
        std::cout << "\n";
        for (const auto& f : d->fields()) {
            std::cout << "  " << f.name << ": " << nrt::kind_name(f.kind);
            if (!f.element.empty()) std::cout << "<" << f.element << ">";
            if (f.length) std::cout << "[" << f.length << "]";
            std::cout << "\n";
        }
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"nrt - self-describing columnar object store tools"};
    app.require_subcommand(1);
    std::string plugins_path;
    app.add_option("--plugins", plugins_path, "plugin config file (default: $NRT_PLUGINS)");

    std::string uri, tree_name, expr, select, out_path, type_filter, fn_name, key_name, xml_path;
    std::string format;
    std::vector<std::string> inputs, fn_branches;
    uint32_t bins = 0, cycle = 0;
    double lo = 0, hi = 0;
    bool have_bins = false;

    auto* ls = app.add_subcommand("ls", "list keys: name;cycle;type;version;bytes");
    ls->add_option("uri", uri)->required();
    ls->add_option("--format", format, "output format: tsv")->check(CLI::IsMember({"tsv"}));

    auto* inspect = app.add_subcommand("inspect", "show header and schema inventory");
    inspect->add_option("uri", uri)->required();

    auto* schema = app.add_subcommand("schema", "dump type descriptors");
    schema->add_option("uri", uri)->required();
    schema->add_option("--type", type_filter, "only this type");

    auto* draw = app.add_subcommand("draw", "histogram an expression over a tree");
    draw->add_option("uri", uri)->required();
    draw->add_option("tree", tree_name)->required();
    draw->add_option("expr", expr)->required();
    draw->add_option("--select", select, "selection expression (weight)");
    auto* bins_opt = draw->add_option("--bins", bins, "bin count");
    draw->add_option("--min", lo, "lower edge")->needs(bins_opt);
    draw->add_option("--max", hi, "upper edge")->needs(bins_opt);
    draw->add_option("--out", out_path, "write the histogram record as XML instead");

    auto* map_cmd = app.add_subcommand("map", "histogram a registered function of branch values");
    map_cmd->add_option("uri", uri)->required();
    map_cmd->add_option("tree", tree_name)->required();
    map_cmd->add_option("fn", fn_name)->required();
    map_cmd->add_option("branches", fn_branches, "branch arguments")->required();
    auto* mbins_opt = map_cmd->add_option("--bins", bins, "bin count");
    map_cmd->add_option("--min", lo, "lower edge")->needs(mbins_opt);
    map_cmd->add_option("--max", hi, "upper edge")->needs(mbins_opt);
    map_cmd->add_option("--out", out_path, "write the histogram record as XML instead");

    auto* merge_cmd = app.add_subcommand("merge-hist", "merge histogram XML files");
    merge_cmd->add_option("out", out_path)->required();
    merge_cmd->add_option("inputs", inputs)->required()->expected(-1);

    auto* export_cmd = app.add_subcommand("export-xml", "print a keyed record as XML");
    export_cmd->add_option("uri", uri)->required();
    export_cmd->add_option("key", key_name)->required();
    export_cmd->add_option("--cycle", cycle, "cycle (default: latest)");

    auto* import_cmd = app.add_subcommand("import-xml", "write an XML record into a new container");
    import_cmd->add_option("path", uri)->required();
    import_cmd->add_option("xml", xml_path)->required();
    import_cmd->add_option("--name", key_name, "key name (default: the record's type)");

    auto* simulate = app.add_subcommand("simulate", "run the pull scheduler simulation");
    int n_workers = 1, n_packets = 4;
    double locality = 1.0;
    uint64_t seed = 0, entries_per_packet = 10;
    bool random_speeds = false;
    std::string trace_path;
    simulate->add_option("--workers", n_workers, "worker count");
    simulate->add_option("--packets", n_packets, "packet count");
    simulate->add_option("--locality", locality, "fraction of packets with one host");
    simulate->add_option("--seed", seed, "scenario seed");
    simulate->add_option("--entries", entries_per_packet, "entries per packet");
    simulate->add_flag("--random-speeds", random_speeds, "randomize worker speeds from the seed");
    simulate->add_option("--trace", trace_path, "write the event trace CSV here");
    simulate->add_option("--format", format, "output format: tsv")->check(CLI::IsMember({"tsv"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return kExitInput;
    }

    have_bins = bins_opt->count() > 0 || mbins_opt->count() > 0;
    bool tsv = format == "tsv";

    try {
        auto registry = make_registry(plugins_path);

        if (*ls) return cmd_ls(open_reader(registry, uri).source(), tsv);
        if (*inspect) return cmd_inspect(open_reader(registry, uri));
        if (*schema) return cmd_schema(open_reader(registry, uri).source(), type_filter);

        if (*draw || *map_cmd) {
            auto reader = open_reader(registry, uri);
            nrt::Tree tree = nrt::Tree::open(reader.source(), tree_name);
            nrt::HistSpec spec =
                have_bins ? nrt::HistSpec::fixed(bins, lo, hi) : nrt::HistSpec::auto_range();
            nrt::Hist1D h;
            if (*draw) {
                h = nrt::draw(tree, expr, select, spec);
            } else {
                const auto& fns = nrt::FunctionRegistry::builtin();
                (void)fns.arity(fn_name); // fail fast on unknown names
                std::vector<std::string> branches = fn_branches;
                std::string fname = fn_name;
                h = nrt::map_entries(
                    tree,
                    [&](const nrt::EntryAccessor& entry) -> std::optional<double> {
                        std::vector<double> args;
                        args.reserve(branches.size());
                        for (const auto& b : branches) args.push_back(entry(b));
                        return fns.call(fname, args);
                    },
                    spec);
                h.set_name(fname);
            }
            if (!out_path.empty()) {
                nrt::SchemaRegistry schemas;
                write_file(out_path, nrt::record_to_xml(h.to_record(schemas), schemas));
            } else {
                render_hist(std::cout, h);
            }
            return kExitOk;
        }

        if (*merge_cmd) {
            std::vector<nrt::Hist1D> hists;
            for (const auto& in : inputs) {
                nrt::SchemaRegistry schemas;
                hists.push_back(nrt::Hist1D::from_record(nrt::import_xml(read_file(in), schemas)));
            }
            nrt::Hist1D merged = nrt::merge(hists);
            nrt::SchemaRegistry schemas;
            write_file(out_path, nrt::record_to_xml(merged.to_record(schemas), schemas));
            std::cout << "merged " << hists.size() << " histograms, entries=" << merged.entries()
                      << "\n";
            return kExitOk;
        }

        if (*export_cmd) {
            auto reader = open_reader(registry, uri);
            std::optional<uint32_t> c;
            if (export_cmd->count("--cycle")) c = cycle;
            std::cout << nrt::export_xml(reader.source(), key_name, c);
            return kExitOk;
        }

        if (*import_cmd) {
            nrt::SchemaRegistry schemas;
            nrt::DynamicRecord rec = nrt::import_xml(read_file(xml_path), schemas);
            if (std::filesystem::exists(uri))
                nrt::fail(nrt::Errc::io_failure, "'" + uri + "' already exists");
            auto container = nrt::Container::create(uri);
            std::string key = key_name.empty() ? rec.type_name : key_name;
            container->put(key, rec, schemas);
            container->finalize();
            std::cout << "wrote '" << key << "' (" << rec.type_name << " v" << rec.type_version
                      << ") to " << uri << "\n";
            return kExitOk;
        }

        if (*simulate) {
            if (n_workers <= 0 || n_packets <= 0) {
                std::cerr << "error: worker and packet counts must be positive\n";
                return kExitInput;
            }
            auto [workers, packets] =
                nrt::scenario_gen(seed, n_workers, n_packets, locality, random_speeds,
                                  entries_per_packet);
            auto result = nrt::run(workers, packets, seed);
            if (!trace_path.empty()) write_file(trace_path, nrt::trace_csv(result.trace));
            std::cout << nrt::summary_text(result.summary, tsv);
            return kExitOk;
        }
    } catch (const nrt::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        switch (e.code()) {
        case nrt::Errc::parse_error:
        case nrt::Errc::no_such_branch:
        case nrt::Errc::no_such_function:
        case nrt::Errc::arity_mismatch:
        case nrt::Errc::mixed_axes:
            return kExitExpr;
        default:
            return kExitInput;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitInput;
}
