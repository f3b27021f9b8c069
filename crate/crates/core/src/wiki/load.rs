use std::collections::HashMap;
use std::path::Path;

use quick_xml::events::Event;
use quick_xml::Reader;

use super::RawPage;
use crate::error::{Error, Result};

const NAMESPACES: &[&str] = &[
    "User",
    "Talk",
    "User talk",
    "Help",
    "Help talk",
    "Category",
    "Category talk",
    "Template",
    "Template talk",
    "File",
    "File talk",
    "Image",
    "MediaWiki",
    "MediaWiki talk",
    "ProofWiki",
    "ProofWiki talk",
    "Definition",
    "Definition talk",
    "Axiom",
    "Axiom talk",
    "Symbols",
    "Symbols talk",
    "Mathematician",
    "Mathematician talk",
    "Book",
    "Book talk",
    "Special",
    "Module",
    "Module talk",
];

/// Namespace prefix of a title, or "" for the main namespace.
pub fn namespace_of(title: &str) -> &'static str {
    let Some((prefix, _)) = title.split_once(':') else {
        return "";
    };
    let prefix = prefix.trim().replace('_', " ");
    NAMESPACES
        .iter()
        .find(|ns| ns.eq_ignore_ascii_case(&prefix))
        .copied()
        .unwrap_or("")
}

/// Loads pages from a MediaWiki XML export or a directory of `*.wiki` files,
/// sorted by title.
///
/// In a directory, the title is the file stem with `%2F`, `%3A` and `%25`
/// decoded to `/`, `:` and `%`.
pub fn load_pages(source: &Path) -> Result<Vec<RawPage>> {
    let mut pages = if source.is_dir() {
        load_dir(source)?
    } else {
        let text = std::fs::read_to_string(source).map_err(|e| Error::io(source, e))?;
        parse_xml(&text)?
    };
    pages.sort_by(|a, b| a.title.cmp(&b.title));
    Ok(pages)
}

fn decode_stem(stem: &str) -> String {
    stem.replace("%2F", "/")
        .replace("%2f", "/")
        .replace("%3A", ":")
        .replace("%3a", ":")
        .replace("%25", "%")
}

fn load_dir(dir: &Path) -> Result<Vec<RawPage>> {
    let mut pages = Vec::new();
    for item in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = item.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("wiki") || !path.is_file() {
            continue;
        }
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        pages.push(RawPage::new(decode_stem(stem), text));
    }
    Ok(pages)
}

#[derive(Default)]
struct PageBuilder {
    title: String,
    ns_key: Option<String>,
    text: String,
}

fn xml_error(reader: &Reader<&[u8]>, message: impl ToString) -> Error {
    Error::Xml {
        offset: reader.error_position(),
        message: message.to_string(),
    }
}

fn parse_xml(xml: &str) -> Result<Vec<RawPage>> {
    let mut reader = Reader::from_str(xml);
    let mut namespaces: HashMap<String, String> = HashMap::new();
    let mut pages = Vec::new();
    let mut path: Vec<String> = Vec::new();
    let mut page: Option<PageBuilder> = None;
    let mut ns_attr_key: Option<String> = None;
    let mut saw_root = false;

    loop {
        let event = reader.read_event().map_err(|e| xml_error(&reader, e))?;
        match event {
            Event::Start(e) => {
                let name = String::from_utf8_lossy(e.local_name().as_ref()).into_owned();
                saw_root = true;
                match name.as_str() {
                    "page" => page = Some(PageBuilder::default()),
                    "namespace" => {
                        ns_attr_key = e
                            .try_get_attribute("key")
                            .map_err(|err| xml_error(&reader, err))?
                            .map(|a| String::from_utf8_lossy(&a.value).into_owned());
                    }
                    _ => {}
                }
                path.push(name);
            }
            Event::Empty(e) => {
                saw_root = true;
                if e.local_name().as_ref() == b"namespace" {
                    // an empty <namespace key="0"/> is the main namespace
                    if let Some(a) = e.try_get_attribute("key").map_err(|err| xml_error(&reader, err))? {
                        namespaces.insert(String::from_utf8_lossy(&a.value).into_owned(), String::new());
                    }
                }
            }
            Event::End(e) => {
                let name = e.local_name();
                if name.as_ref() == b"page" {
                    if let Some(b) = page.take() {
                        if b.title.trim().is_empty() {
                            return Err(xml_error(&reader, "page without title"));
                        }
                        let namespace = match b.ns_key.as_ref().and_then(|k| namespaces.get(k.trim())) {
                            Some(ns) => ns.clone(),
                            None => namespace_of(&b.title).to_string(),
                        };
                        pages.push(RawPage {
                            title: b.title,
                            wikitext: b.text,
                            namespace,
                        });
                    }
                }
                path.pop();
            }
            Event::Text(t) => {
                let text = t.unescape().map_err(|e| xml_error(&reader, e))?;
                on_text(&path, &text, &mut page, &mut namespaces, &ns_attr_key);
            }
            Event::CData(c) => {
                let raw = c.into_inner();
                let text = std::str::from_utf8(&raw).map_err(|e| xml_error(&reader, e))?;
                on_text(&path, text, &mut page, &mut namespaces, &ns_attr_key);
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if !path.is_empty() {
        return Err(Error::Xml {
            offset: xml.len() as u64,
            message: format!("unclosed element <{}>", path.last().unwrap()),
        });
    }
    if !saw_root {
        return Err(Error::Xml {
            offset: 0,
            message: "no XML elements found".into(),
        });
    }
    Ok(pages)
}

fn on_text(
    path: &[String],
    text: &str,
    page: &mut Option<PageBuilder>,
    namespaces: &mut HashMap<String, String>,
    ns_attr_key: &Option<String>,
) {
    let Some(leaf) = path.last() else { return };
    match leaf.as_str() {
        "namespace" => {
            if let Some(key) = ns_attr_key {
                namespaces.insert(key.clone(), text.trim().to_string());
            }
        }
        "title" if path.iter().any(|p| p == "page") => {
            if let Some(b) = page {
                b.title.push_str(text);
            }
        }
        "ns" if path.iter().any(|p| p == "page") => {
            if let Some(b) = page {
                b.ns_key = Some(text.trim().to_string());
            }
        }
        "text" if path.iter().any(|p| p == "revision") => {
            if let Some(b) = page {
                b.text.push_str(text);
            }
        }
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn namespaces_from_titles() {
        assert_eq!(namespace_of("Definition:Set"), "Definition");
        assert_eq!(namespace_of("User talk:Someone"), "User talk");
        assert_eq!(namespace_of("Euclid's Lemma"), "");
        assert_eq!(namespace_of("Ratio: A Theorem"), "");
    }

    #[test]
    fn directory_pages_sorted() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("B.wiki"), "b").unwrap();
        std::fs::write(dir.path().join("A.wiki"), "a").unwrap();
        std::fs::write(dir.path().join("notes.txt"), "skip").unwrap();
        std::fs::write(dir.path().join("Definition%3ASet%2FAlso.wiki"), "c").unwrap();
        let pages = load_pages(dir.path()).unwrap();
        let titles: Vec<_> = pages.iter().map(|p| p.title.as_str()).collect();
        assert_eq!(titles, ["A", "B", "Definition:Set/Also"]);
        assert_eq!(pages[2].namespace, "Definition");
    }

    #[test]
    fn empty_directory() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_pages(dir.path()).unwrap().is_empty());
    }

    #[test]
    fn missing_source_is_io_error() {
        assert!(matches!(
            load_pages(Path::new("/nonexistent/dump.xml")),
            Err(Error::Io { .. })
        ));
    }

    const EXPORT: &str = r#"<mediawiki xmlns="http://www.mediawiki.org/xml/export-0.10/">
  <siteinfo>
    <namespaces>
      <namespace key="0" case="first-letter" />
      <namespace key="1" case="first-letter">Talk</namespace>
      <namespace key="102" case="first-letter">Definition</namespace>
    </namespaces>
  </siteinfo>
  <page>
    <title>Talk:Euclid's Lemma</title>
    <ns>1</ns>
    <revision><text xml:space="preserve">discussion</text></revision>
  </page>
  <page>
    <title>Euclid's Lemma</title>
    <ns>0</ns>
    <revision><text xml:space="preserve">== Theorem ==
If $p \divides a b$ &amp; ...</text></revision>
  </page>
  <page>
    <title>Definition:Prime Number</title>
    <ns>102</ns>
    <revision><text><![CDATA[A number <b>p</b>]]></text></revision>
  </page>
</mediawiki>"#;

    #[test]
    fn xml_export_preserves_namespaces() {
        let pages = parse_xml(EXPORT).unwrap();
        assert_eq!(pages.len(), 3);
        let by_title: HashMap<_, _> = pages.iter().map(|p| (p.title.as_str(), p)).collect();
        assert_eq!(by_title["Talk:Euclid's Lemma"].namespace, "Talk");
        assert_eq!(by_title["Euclid's Lemma"].namespace, "");
        assert!(by_title["Euclid's Lemma"].wikitext.contains("& ..."));
        assert_eq!(by_title["Definition:Prime Number"].namespace, "Definition");
        assert_eq!(by_title["Definition:Prime Number"].wikitext, "A number <b>p</b>");
    }

    #[test]
    fn malformed_xml_names_offset() {
        let bad = "<mediawiki><page><title>A</title></revision></page></mediawiki>";
        match parse_xml(bad) {
            Err(Error::Xml { offset, .. }) => assert!(offset > 0),
            other => panic!("expected xml error, got {other:?}"),
        }
    }
}
