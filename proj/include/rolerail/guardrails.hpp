#pragma once

#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rolerail/errors.hpp"
#include "rolerail/llm.hpp"
#include "rolerail/policy.hpp"

namespace rolerail {

enum class FilterKind { input, output };

inline const char* payload_placeholder(FilterKind kind) {
    return kind == FilterKind::input ? "user_input" : "bot_response";
}

namespace detail {

/// Finds the n-th occurrence of a {{ name }} placeholder (whitespace inside
/// the braces is tolerated). Returns npos when absent.
inline std::size_t find_placeholder(const std::string& text, const std::string& name, std::size_t from,
                                    std::size_t* length_out) {
    std::size_t pos = from;
    while ((pos = text.find("{{", pos)) != std::string::npos) {
        std::size_t end = text.find("}}", pos + 2);
        if (end == std::string::npos) return std::string::npos;
        std::string inner = text.substr(pos + 2, end - pos - 2);
        std::size_t first = inner.find_first_not_of(" \t");
        std::size_t last = inner.find_last_not_of(" \t");
        if (first != std::string::npos && inner.substr(first, last - first + 1) == name) {
            if (length_out) *length_out = end + 2 - pos;
            return pos;
        }
        pos = end + 2;
    }
    return std::string::npos;
}

inline std::size_t count_placeholder(const std::string& text, const std::string& name) {
    std::size_t count = 0;
    std::size_t pos = 0, len = 0;
    while ((pos = find_placeholder(text, name, pos, &len)) != std::string::npos) {
        ++count;
        pos += len;
    }
    return count;
}

inline std::string replace_placeholder(std::string text, const std::string& name, const std::string& value) {
    std::size_t len = 0;
    std::size_t pos = find_placeholder(text, name, 0, &len);
    if (pos == std::string::npos) {
        throw Error(Errc::template_error, "placeholder '" + name + "' not found");
    }
    text.replace(pos, len, value);
    return text;
}

}  // namespace detail

/// Prompt template for a role-access filter. Holds the raw text with the
/// three placeholders {{role_description}}, {{user_role}} and
/// {{user_input}} (input filter) or {{bot_response}} (output filter).
/// Rendering substitutes all three and touches nothing else.
struct FilterPromptTemplate {
    FilterKind kind = FilterKind::input;
    std::string text;

    void validate() const {
        for (const std::string name :
             {std::string("role_description"), std::string("user_role"), std::string(payload_placeholder(kind))}) {
            std::size_t count = detail::count_placeholder(text, name);
            if (count != 1) {
                throw Error(Errc::template_error, "template must contain placeholder '" + name + "' exactly once, found " +
                                                      std::to_string(count));
            }
        }
    }

    /// Renders the template for one request. `payload` is the user message
    /// (input filter) or the candidate response (output filter).
    std::string render(const RoleCatalog& catalog, const std::string& user_role, const std::string& payload) const {
        const Role* role = catalog.find(user_role);
        if (!role) throw Error(Errc::unknown_role, "role '" + user_role + "' is not in the catalog");
        std::ostringstream roles;
        bool first = true;
        for (const auto& r : catalog.roles) {
            if (!first) roles << '\n';
            roles << r.name << ": " << r.description;
            first = false;
        }
        std::string out = detail::replace_placeholder(text, "role_description", roles.str());
        out = detail::replace_placeholder(out, "user_role", role->name);
        out = detail::replace_placeholder(out, payload_placeholder(kind), payload);
        return out;
    }

    static FilterPromptTemplate load(const std::string& path, FilterKind kind) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error(Errc::config_error, "cannot open template file '" + path + "'");
        std::ostringstream buffer;
        buffer << in.rdbuf();
        FilterPromptTemplate tmpl{kind, buffer.str()};
        tmpl.validate();
        return tmpl;
    }
};

/// Built-in copy of the shipped input-filter template
/// (resources/templates/input_filter_prompt.txt). The file is the editable
/// source of truth; this mirror keeps zero-config runs working and the test
/// suite pins the two together.
inline const FilterPromptTemplate& default_input_filter_template() {
    static const FilterPromptTemplate tmpl{
        FilterKind::input,
        "You are tasked with assigning one or more roles to user message below based on the given context and not "
        "the user's role.\n"
        "The context will include a brief description of various roles. If the message can be attributed to a "
        "specific role, assign only that role.\n"
        "If the message is generic or could be asked by multiple roles, assign all relevant roles from the context.\n"
        "After determining the roles for the message, you must decide if the message's role(s) match the user's "
        "role.\n"
        "\n"
        "Follow these steps (for 1, 2, 3 and 4 don't use the user's role):\n"
        "\n"
        "1) Analyze the message and determine which role(s) could be asking this based on the context provided and "
        "not the user's role.\n"
        "2) If the message is specific, assign the most appropriate role based on the provided descriptions.\n"
        "3) If the message is too broad or could apply to multiple roles, assign all relevant roles.\n"
        "4) For ambiguous messages, select the most likely role(s).\n"
        "5) Check if the \"User's role\" below is included in the assigned roles.\n"
        "6) The answer should be exactly \"Answer: Yes.\" if the user's role is among the assigned roles, or exactly "
        "\"Answer: No.\" if it is not, based solely on the comparison of roles. Do not include quotation marks in "
        "the response.\n"
        "\n"
        "Context (Role Descriptions):\n"
        "{{role_description}}\n"
        "\n"
        "Examples:\n"
        "\n"
        "User Message: \"How does Ravenous Void works?\"\n"
        "Assigned Roles: Wizard\n"
        "User's role: Wizard\n"
        "Answer: Yes. (Because the user's role is among the assigned roles.)\n"
        "\n"
        "User Message: \"Can I cast a spell as a bonus action and another spell as an action on the same turn?\"\n"
        "Assigned Roles: Artificer, Bard, Cleric, Druid, Paladin, Ranger, Sorcerer, Warlock, Wizard\n"
        "User's role: Bard\n"
        "Answer: Yes. (Because the user's role is among the assigned roles.)\n"
        "\n"
        "User Message: \"If I cast Invisibility, what happens if I take damage or interact with objects?\"\n"
        "Assigned Roles: Wizard, Sorcerer, Bard\n"
        "User's role: Warlock\n"
        "Answer: No. (Because the user's role is not among the assigned roles.)\n"
        "\n"
        "User's role: \"{{user_role}}\"\n"
        "User message: \"{{user_input}}\"\n"};
    return tmpl;
}

/// Built-in copy of the shipped output-filter template
/// (resources/templates/output_filter_prompt.txt). Same contract as the
/// input filter, evaluated over the generated response instead of the query.
inline const FilterPromptTemplate& default_output_filter_template() {
    static const FilterPromptTemplate tmpl{
        FilterKind::output,
        "You are tasked with assigning one or more roles to the bot response below based on the given context and "
        "not the user's role.\n"
        "The context will include a brief description of various roles. If the response can be attributed to a "
        "specific role, assign only that role.\n"
        "If the response is generic or could be useful to multiple roles, assign all relevant roles from the "
        "context.\n"
        "After determining the roles for the response, you must decide if the response's role(s) match the user's "
        "role.\n"
        "\n"
        "Follow these steps (for 1, 2, 3 and 4 don't use the user's role):\n"
        "\n"
        "1) Analyze the response and determine which role(s) could make use of this information based on the "
        "context provided and not the user's role.\n"
        "2) If the response is specific, assign the most appropriate role based on the provided descriptions.\n"
        "3) If the response is too broad or could apply to multiple roles, assign all relevant roles.\n"
        "4) For ambiguous responses, select the most likely role(s).\n"
        "5) Check if the \"User's role\" below is included in the assigned roles.\n"
        "6) The answer should be exactly \"Answer: Yes.\" if the user's role is among the assigned roles, or exactly "
        "\"Answer: No.\" if it is not, based solely on the comparison of roles. Do not include quotation marks in "
        "the response.\n"
        "\n"
        "Context (Role Descriptions):\n"
        "{{role_description}}\n"
        "\n"
        "Examples:\n"
        "\n"
        "Bot Response: \"Ravenous Void creates a sphere of crushing gravity that pulls in creatures and objects.\"\n"
        "Assigned Roles: Wizard\n"
        "User's role: Wizard\n"
        "Answer: Yes. (Because the user's role is among the assigned roles.)\n"
        "\n"
        "Bot Response: \"You can cast a spell as a bonus action and a cantrip as an action on the same turn.\"\n"
        "Assigned Roles: Artificer, Bard, Cleric, Druid, Paladin, Ranger, Sorcerer, Warlock, Wizard\n"
        "User's role: Bard\n"
        "Answer: Yes. (Because the user's role is among the assigned roles.)\n"
        "\n"
        "Bot Response: \"While Invisibility lasts, taking damage does not end it, but attacking or casting a spell "
        "does.\"\n"
        "Assigned Roles: Wizard, Sorcerer, Bard\n"
        "User's role: Warlock\n"
        "Answer: No. (Because the user's role is not among the assigned roles.)\n"
        "\n"
        "User's role: \"{{user_role}}\"\n"
        "Bot response: \"{{bot_response}}\"\n"};
    return tmpl;
}

inline std::string render_input_filter_prompt(const RoleCatalog& catalog, const std::string& user_role,
                                              const std::string& query) {
    return default_input_filter_template().render(catalog, user_role, query);
}

inline std::string render_output_filter_prompt(const RoleCatalog& catalog, const std::string& user_role,
                                               const std::string& response_text) {
    return default_output_filter_template().render(catalog, user_role, response_text);
}

// ---------------------------------------------------------------------------
// Verdict parsing
// ---------------------------------------------------------------------------

/// Parsed filter decision. parsed=false means the completion carried no
/// usable answer and the fail-closed policy forced a block.
struct FilterOutcome {
    AccessLabel decision = AccessLabel::block;
    bool parsed = false;
    std::string raw_completion;
};

/// Extracts the decision from a filter completion. The decision is the
/// final occurrence of "Answer: Yes." or "Answer: No."; chain-of-thought
/// text before it and a trailing explanation after it are tolerated. Any
/// completion without such a terminal marker blocks with parsed=false.
/// Never throws: malformedness is data, not an exception.
inline FilterOutcome parse_filter_verdict(const std::string& completion) {
    const std::size_t yes = completion.rfind("Answer: Yes.");
    const std::size_t no = completion.rfind("Answer: No.");
    FilterOutcome outcome;
    outcome.raw_completion = completion;
    if (yes == std::string::npos && no == std::string::npos) {
        outcome.decision = AccessLabel::block;
        outcome.parsed = false;
        return outcome;
    }
    outcome.parsed = true;
    if (yes != std::string::npos && (no == std::string::npos || yes > no)) {
        outcome.decision = AccessLabel::allow;
    } else {
        outcome.decision = AccessLabel::block;
    }
    return outcome;
}

struct FilterRun {
    Verdict verdict;
    FilterOutcome outcome;
};

/// Renders the filter prompt, invokes the chat backend and parses the
/// completion. Backend failures never escape: they become fail-closed
/// block verdicts.
inline FilterRun run_filter(ChatBackend& backend, const FilterPromptTemplate& tmpl, const RoleCatalog& catalog,
                            const std::string& user_role, const std::string& payload, const ChatParams& params) {
    const StageId stage = tmpl.kind == FilterKind::input ? StageId::input_filter : StageId::output_filter;
    // Filter calls always decode at temperature 0.
    ChatParams filter_params = params;
    filter_params.temperature = 0.0;
    std::string prompt = tmpl.render(catalog, user_role, payload);
    std::string completion;
    try {
        completion = backend.chat({user_message(std::move(prompt))}, filter_params);
    } catch (const Error& e) {
        FilterOutcome outcome;
        outcome.decision = AccessLabel::block;
        outcome.parsed = false;
        outcome.raw_completion = std::string("<backend error: ") + e.what() + ">";
        return FilterRun{fail_closed(stage), std::move(outcome)};
    }
    FilterOutcome outcome = parse_filter_verdict(completion);
    Verdict verdict =
        outcome.parsed ? make_verdict(outcome.decision, stage, VerdictReason::filter_decision) : fail_closed(stage);
    return FilterRun{verdict, std::move(outcome)};
}

}  // namespace rolerail
