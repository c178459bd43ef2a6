#include "patternflow/document.hpp"

#include <cctype>

#include "patternflow/errors.hpp"

namespace patternflow {
namespace {

[[noreturn]] void parse_fail(std::size_t offset, const std::string& what) {
  raise("ParseError", what + " at offset " + std::to_string(offset));
}

bool valid_tag_name(const std::string& name) {
  if (name.empty()) return false;
  auto head = [](char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
  };
  auto rest = [&](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
           c == '.' || c == '-';
  };
  if (!head(name[0])) return false;
  for (std::size_t i = 1; i < name.size(); i++)
    if (!rest(name[i])) return false;
  return true;
}

std::string escape_text(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

[[noreturn]] void unsupported(const std::string& what) {
  raise("MarshalUnsupported", what);
}

void render_into(const Doc& value, std::string& out) {
  if (value.is_string()) {
    const auto& s = value.get_ref<const std::string&>();
    if (s.empty()) unsupported("empty string leaf is not representable");
    out += escape_text(s);
    return;
  }
  if (value.is_object()) {
    for (const auto& [key, child] : value.items()) {
      if (key == "li") unsupported("'li' is reserved for array items");
      if (!valid_tag_name(key))
        unsupported("key '" + key + "' is not a valid element name");
      out += "<" + key + ">";
      render_into(child, out);
      out += "</" + key + ">";
    }
    return;
  }
  if (value.is_array()) {
    if (value.empty()) unsupported("empty array is not representable");
    for (const auto& item : value) {
      out += "<li>";
      render_into(item, out);
      out += "</li>";
    }
    return;
  }
  unsupported("leaf of type " + std::string(value.type_name()) +
              " is not representable (string leaves only)");
}

class XmlParser {
 public:
  explicit XmlParser(const std::string& text) : s_(text) {}

  Doc parse_document() {
    skip_misc();
    if (eof()) parse_fail(pos_, "expected root element");
    auto [name, value] = parse_element();
    skip_misc();
    if (!eof()) parse_fail(pos_, "content after root element");
    if (name == "doc") return value;
    Doc wrapped = Doc::object();
    wrapped[name] = std::move(value);
    return wrapped;
  }

 private:
  bool eof() const { return pos_ >= s_.size(); }
  char cur() const { return s_[pos_]; }

  void skip_ws() {
    while (!eof() && std::isspace(static_cast<unsigned char>(cur()))) pos_++;
  }

  void skip_misc() {
    for (;;) {
      skip_ws();
      if (s_.compare(pos_, 4, "<!--") == 0) {
        auto end = s_.find("-->", pos_ + 4);
        if (end == std::string::npos) parse_fail(pos_, "unterminated comment");
        pos_ = end + 3;
        continue;
      }
      if (s_.compare(pos_, 2, "<?") == 0) {
        auto end = s_.find("?>", pos_ + 2);
        if (end == std::string::npos) parse_fail(pos_, "unterminated prolog");
        pos_ = end + 2;
        continue;
      }
      return;
    }
  }

  std::string parse_name() {
    std::size_t start = pos_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(cur())) ||
                      cur() == '_' || cur() == '.' || cur() == '-'))
      pos_++;
    std::string name = s_.substr(start, pos_ - start);
    if (!valid_tag_name(name)) parse_fail(start, "invalid element name");
    return name;
  }

  std::string decode_entity(std::size_t at) {
    static const std::pair<const char*, char> entities[] = {
        {"&amp;", '&'}, {"&lt;", '<'}, {"&gt;", '>'},
        {"&quot;", '"'}, {"&apos;", '\''}};
    for (auto& [ent, ch] : entities) {
      std::size_t n = std::char_traits<char>::length(ent);
      if (s_.compare(at, n, ent) == 0) {
        pos_ = at + n;
        return std::string(1, ch);
      }
    }
    parse_fail(at, "unknown entity");
  }

  /// Returns (name, value). pos_ must be at '<'.
  std::pair<std::string, Doc> parse_element() {
    std::size_t open = pos_;
    if (cur() != '<') parse_fail(pos_, "expected '<'");
    pos_++;
    std::string name = parse_name();
    skip_ws();
    if (!eof() && cur() != '>' && cur() != '/')
      parse_fail(pos_, "attributes are not supported");
    if (s_.compare(pos_, 2, "/>") == 0) {
      pos_ += 2;
      return {name, Doc::object()};
    }
    if (eof() || cur() != '>') parse_fail(pos_, "expected '>'");
    pos_++;

    Doc children = Doc::object();
    bool sawElement = false;
    bool liOnly = true;
    Doc items = Doc::array();
    std::string text;
    bool sawText = false;

    for (;;) {
      if (eof()) parse_fail(open, "element '" + name + "' is not closed");
      if (cur() == '<') {
        if (s_.compare(pos_, 2, "</") == 0) break;
        if (s_.compare(pos_, 4, "<!--") == 0) {
          skip_misc();
          continue;
        }
        if (sawText) parse_fail(pos_, "mixed text and elements");
        sawElement = true;
        auto [childName, childValue] = parse_element();
        if (childName == "li") {
          items.push_back(std::move(childValue));
        } else {
          liOnly = false;
          if (children.contains(childName))
            parse_fail(pos_, "duplicate element '" + childName + "'");
          children[childName] = std::move(childValue);
        }
        if (!items.empty() && !liOnly)
          parse_fail(pos_, "mixed <li> and named elements");
        continue;
      }
      if (cur() == '&') {
        text += decode_entity(pos_);
        sawText = true;
        continue;
      }
      char c = cur();
      if (!std::isspace(static_cast<unsigned char>(c))) sawText = true;
      text.push_back(c);
      pos_++;
      if (sawElement && sawText) parse_fail(pos_, "mixed text and elements");
    }

    pos_ += 2;
    std::string closeName = parse_name();
    if (closeName != name)
      parse_fail(pos_, "mismatched closing tag '" + closeName + "'");
    skip_ws();
    if (eof() || cur() != '>') parse_fail(pos_, "expected '>'");
    pos_++;

    if (sawElement) {
      if (!items.empty()) return {name, std::move(items)};
      return {name, std::move(children)};
    }
    if (sawText) return {name, Doc(text)};
    return {name, Doc::object()};
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

Doc parse_json_doc(const std::string& text) {
  try {
    return Doc::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    parse_fail(e.byte > 0 ? e.byte - 1 : 0, "invalid document");
  }
}

std::string render_json_doc(const Doc& doc) { return doc.dump(); }

Doc parse_xml_doc(const std::string& text) {
  return XmlParser(text).parse_document();
}

std::string render_xml_doc(const Doc& doc) {
  std::string out;
  if (doc.is_object() && doc.size() == 1) {
    const auto& key = doc.items().begin().key();
    if (key != "doc" && key != "li" && valid_tag_name(key)) {
      out += "<" + key + ">";
      render_into(doc.items().begin().value(), out);
      out += "</" + key + ">";
      return out;
    }
  }
  out += "<doc>";
  render_into(doc, out);
  out += "</doc>";
  return out;
}

const Doc* doc_find(const Doc& doc, const std::string& path) {
  const Doc* cur = &doc;
  std::size_t start = 0;
  while (start <= path.size()) {
    std::size_t end = path.find('/', start);
    if (end == std::string::npos) end = path.size();
    std::string key = path.substr(start, end - start);
    if (!cur->is_object()) return nullptr;
    auto it = cur->find(key);
    if (it == cur->end()) return nullptr;
    cur = &*it;
    start = end + 1;
  }
  return cur;
}

void doc_set(Doc& doc, const std::string& path, Doc value) {
  Doc* cur = &doc;
  std::size_t start = 0;
  for (;;) {
    std::size_t end = path.find('/', start);
    if (end == std::string::npos) {
      (*cur)[path.substr(start)] = std::move(value);
      return;
    }
    std::string key = path.substr(start, end - start);
    if (!cur->contains(key) || !(*cur)[key].is_object())
      (*cur)[key] = Doc::object();
    cur = &(*cur)[key];
    start = end + 1;
  }
}

}  // namespace patternflow
