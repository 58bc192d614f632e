#include "permclass/spec.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include <nlohmann/json.hpp>

#include "permclass/errors.hpp"

namespace permclass {

namespace {

void check_root(const Permutation& root) {
    if (root.size() < 2) throw validation_error("production root must have size at least 2");
    if (root.size() == 2) return;  // 12 and 21 are the only options and both are fine
    if (!is_simple(root) || root.size() == 3)
        throw validation_error("production root of size >= 3 must be simple (hence of size >= 4): " +
                               format_permutation(root));
}

}  // namespace

TreeSpec::TreeSpec(std::vector<Family> families) : families_(std::move(families)) {
    const int n = size();
    if (n == 0) throw validation_error("a specification needs at least one family");

    std::set<std::string> names;
    for (const auto& f : families_) {
        if (f.name.empty()) throw validation_error("family names must be nonempty");
        if (!names.insert(f.name).second) throw validation_error("duplicate family name: " + f.name);
    }

    bool any_leaf = false;
    for (const auto& f : families_) {
        any_leaf = any_leaf || f.leaf;
        std::set<std::pair<std::vector<int>, std::vector<int>>> seen;
        for (const auto& p : f.productions) {
            check_root(p.root);
            if (static_cast<int>(p.children.size()) != p.root.size())
                throw validation_error("production of " + f.name + " has arity mismatch");
            for (int c : p.children)
                if (c < 0 || c >= n) throw validation_error("production child index out of range in " + f.name);
            if (!seen.insert({p.root.values(), p.children}).second)
                throw validation_error("duplicate production in family " + f.name);
        }
    }
    if (!any_leaf) throw validation_error("at least one family must contain the leaf");

    // Valuations by fixed point; a family stuck at infinity generates nothing.
    constexpr long long kInf = std::numeric_limits<long long>::max() / 4;
    std::vector<long long> ms(n, kInf);
    for (int i = 0; i < n; ++i)
        if (families_[i].leaf) ms[i] = 1;
    for (bool changed = true; changed;) {
        changed = false;
        for (int i = 0; i < n; ++i) {
            for (const auto& p : families_[i].productions) {
                long long total = 0;
                for (int c : p.children) {
                    total += ms[c];
                    if (total >= kInf) { total = kInf; break; }
                }
                if (total < ms[i]) { ms[i] = total; changed = true; }
            }
        }
    }
    min_size_.resize(n);
    for (int i = 0; i < n; ++i) {
        if (ms[i] >= kInf) throw validation_error("family " + families_[i].name + " generates no tree");
        min_size_[i] = static_cast<int>(std::min<long long>(ms[i], std::numeric_limits<int>::max()));
    }

    // A family is infinite exactly when it reaches a dependency cycle.
    std::vector<std::set<int>> dep(n);
    for (int i = 0; i < n; ++i)
        for (const auto& p : families_[i].productions)
            for (int c : p.children) dep[i].insert(c);
    infinite_.assign(n, false);
    for (int i = 0; i < n; ++i) {
        std::vector<int> stack{i};
        std::vector<bool> seen_f(n, false);
        seen_f[i] = true;
        bool cyc = false;
        while (!stack.empty() && !cyc) {
            int u = stack.back();
            stack.pop_back();
            for (int c : dep[u]) {
                if (c == i) { cyc = true; break; }
                if (!seen_f[c]) { seen_f[c] = true; stack.push_back(c); }
            }
        }
        if (cyc) {
            infinite_[i] = true;
            continue;
        }
        // No cycle through i itself; i is still infinite if it reaches a
        // family that is.
    }
    for (bool changed = true; changed;) {
        changed = false;
        for (int i = 0; i < n; ++i) {
            if (infinite_[i]) continue;
            for (int c : dep[i])
                if (infinite_[c]) { infinite_[i] = true; changed = true; break; }
        }
    }
    if (std::none_of(infinite_.begin(), infinite_.end(), [](bool b) { return b; }))
        throw validation_error("at least one family must be infinite");
}

int TreeSpec::index_of(const std::string& name) const {
    for (int i = 0; i < size(); ++i)
        if (families_[i].name == name) return i;
    return -1;
}

TreeSpec TreeSpec::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("bad specification document: ") + e.what());
    }
    if (!j.is_object() || !j.contains("families") || !j["families"].is_array())
        throw parse_error("specification document must be an object with a 'families' array");

    std::vector<std::string> names;
    for (const auto& jf : j["families"]) {
        if (!jf.is_object() || !jf.contains("name") || !jf["name"].is_string())
            throw parse_error("each family needs a string 'name'");
        names.push_back(jf["name"].get<std::string>());
    }
    auto find_name = [&](const std::string& s) {
        for (size_t i = 0; i < names.size(); ++i)
            if (names[i] == s) return static_cast<int>(i);
        throw validation_error("unknown family name: " + s);
    };

    std::vector<Family> fams;
    for (const auto& jf : j["families"]) {
        Family f;
        f.name = jf["name"].get<std::string>();
        if (jf.contains("leaf")) {
            if (!jf["leaf"].is_boolean()) throw parse_error("'leaf' must be a boolean");
            f.leaf = jf["leaf"].get<bool>();
        }
        if (jf.contains("productions")) {
            if (!jf["productions"].is_array()) throw parse_error("'productions' must be an array");
            for (const auto& jp : jf["productions"]) {
                if (!jp.is_object() || !jp.contains("root") || !jp.contains("children"))
                    throw parse_error("each production needs 'root' and 'children'");
                Production p;
                p.root = parse_permutation(jp["root"].get<std::string>());
                for (const auto& jc : jp["children"]) p.children.push_back(find_name(jc.get<std::string>()));
                f.productions.push_back(std::move(p));
            }
        }
        fams.push_back(std::move(f));
    }
    return TreeSpec(std::move(fams));
}

std::string TreeSpec::to_json_text() const {
    nlohmann::json out;
    out["families"] = nlohmann::json::array();
    for (const auto& f : families_) {
        nlohmann::json jf;
        jf["name"] = f.name;
        jf["leaf"] = f.leaf;
        jf["productions"] = nlohmann::json::array();
        for (const auto& p : f.productions) {
            nlohmann::json jp;
            jp["root"] = format_permutation(p.root);
            jp["children"] = nlohmann::json::array();
            for (int c : p.children) jp["children"].push_back(families_[c].name);
            jf["productions"].push_back(std::move(jp));
        }
        out["families"].push_back(std::move(jf));
    }
    return out.dump(2);
}

namespace {

// Iterative Tarjan over the dependency edges i -> child; components then come
// out dependencies-first, which is the topological order the analyses want.
struct Tarjan {
    const std::vector<std::vector<int>>& adj;
    std::vector<int> index, low, on_stack;
    std::vector<int> stack;
    std::vector<std::vector<int>> comps;
    std::vector<int> comp_of;
    int next = 0;

    explicit Tarjan(const std::vector<std::vector<int>>& a)
        : adj(a), index(a.size(), -1), low(a.size(), 0), on_stack(a.size(), 0), comp_of(a.size(), -1) {}

    void run() {
        for (size_t v = 0; v < adj.size(); ++v)
            if (index[v] < 0) visit(static_cast<int>(v));
    }

    void visit(int root) {
        struct Frame { int v; size_t edge; };
        std::vector<Frame> frames{{root, 0}};
        while (!frames.empty()) {
            auto& fr = frames.back();
            const int v = fr.v;
            if (fr.edge == 0) {
                index[v] = low[v] = next++;
                stack.push_back(v);
                on_stack[v] = 1;
            }
            bool descended = false;
            while (fr.edge < adj[v].size()) {
                const int w = adj[v][fr.edge++];
                if (index[w] < 0) {
                    frames.push_back({w, 0});
                    descended = true;
                    break;
                }
                if (on_stack[w]) low[v] = std::min(low[v], index[w]);
            }
            if (descended) continue;
            if (low[v] == index[v]) {
                std::vector<int> comp;
                while (true) {
                    int w = stack.back();
                    stack.pop_back();
                    on_stack[w] = 0;
                    comp_of[w] = static_cast<int>(comps.size());
                    comp.push_back(w);
                    if (w == v) break;
                }
                std::sort(comp.begin(), comp.end());
                comps.push_back(std::move(comp));
            }
            frames.pop_back();
            if (!frames.empty()) {
                auto& parent = frames.back();
                low[parent.v] = std::min(low[parent.v], low[v]);
            }
        }
    }
};

}  // namespace

DependencyGraph dependency_graph(const TreeSpec& spec) {
    const int n = spec.size();
    DependencyGraph g;
    g.deps.resize(n);
    g.rdeps.resize(n);
    for (int i = 0; i < n; ++i) {
        std::set<int> ds;
        for (const auto& p : spec.family(i).productions)
            for (int c : p.children) ds.insert(c);
        g.deps[i].assign(ds.begin(), ds.end());
        for (int c : ds) g.rdeps[c].push_back(i);
    }
    Tarjan t(g.deps);
    t.run();
    g.scc_of = t.comp_of;
    g.sccs = t.comps;
    const int k = static_cast<int>(g.sccs.size());
    g.scc_cyclic.assign(k, false);
    g.scc_deps.resize(k);
    for (int i = 0; i < n; ++i) {
        for (int c : g.deps[i]) {
            if (g.scc_of[c] == g.scc_of[i]) {
                g.scc_cyclic[g.scc_of[i]] = true;
            } else {
                g.scc_deps[g.scc_of[i]].push_back(g.scc_of[c]);
            }
        }
    }
    for (auto& v : g.scc_deps) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    return g;
}

std::vector<int> dependency_closure(const TreeSpec& spec, const std::vector<int>& seeds) {
    const int n = spec.size();
    std::vector<bool> in(n, false);
    std::vector<int> stack;
    for (int s : seeds) {
        if (s < 0 || s >= n) throw validation_error("family index out of range");
        if (!in[s]) { in[s] = true; stack.push_back(s); }
    }
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (const auto& p : spec.family(u).productions)
            for (int c : p.children)
                if (!in[c]) { in[c] = true; stack.push_back(c); }
    }
    std::vector<int> out;
    for (int i = 0; i < n; ++i)
        if (in[i]) out.push_back(i);
    return out;
}

TreeSpec restrict(const TreeSpec& spec, const std::vector<int>& keep) {
    std::vector<int> ks(keep);
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    if (ks.empty()) throw closure_error("restriction to an empty family set");
    std::vector<int> remap(spec.size(), -1);
    for (size_t i = 0; i < ks.size(); ++i) {
        if (ks[i] < 0 || ks[i] >= spec.size()) throw closure_error("family index out of range");
        remap[ks[i]] = static_cast<int>(i);
    }
    std::vector<Family> fams;
    for (int old : ks) {
        Family f = spec.family(old);
        for (auto& p : f.productions)
            for (auto& c : p.children) {
                if (remap[c] < 0)
                    throw closure_error("family " + spec.family(old).name + " references " +
                                        spec.family(c).name + " outside the restriction");
                c = remap[c];
            }
        fams.push_back(std::move(f));
    }
    return TreeSpec(std::move(fams));
}

}  // namespace permclass
