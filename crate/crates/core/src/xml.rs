//! Reading XML documents as element trees.
//!
//! Only element structure and tag names survive: attributes, text, comments,
//! processing instructions and doctype declarations are dropped. Tag names
//! are kept byte-exact, namespace prefix included.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use quick_xml::events::Event;
use quick_xml::Reader;

use crate::error::XmlError;
use crate::tree::{LabelledTree, TreeBuilder};

/// Parses an XML document from a buffered reader.
pub fn parse_xml<R: BufRead>(input: R) -> Result<LabelledTree, XmlError> {
    let mut reader = Reader::from_reader(input);
    reader.config_mut().check_end_names = true;
    let mut builder = TreeBuilder::new();
    let mut buf = Vec::new();
    let mut seen_element = false;
    loop {
        let offset = reader.buffer_position();
        let event = reader.read_event_into(&mut buf).map_err(|e| match e {
            quick_xml::Error::Io(io) => {
                XmlError::Io(std::io::Error::new(io.kind(), io.to_string()))
            }
            other => XmlError::Syntax {
                offset: reader.error_position(),
                message: other.to_string(),
            },
        })?;
        let tree_err = |source| XmlError::Tree { offset, source };
        match event {
            Event::Start(e) => {
                seen_element = true;
                builder.open(e.name().as_ref()).map_err(tree_err)?;
            }
            Event::Empty(e) => {
                seen_element = true;
                builder.open(e.name().as_ref()).map_err(tree_err)?;
                builder.close().map_err(tree_err)?;
            }
            Event::End(_) => builder.close().map_err(tree_err)?,
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    if !seen_element {
        return Err(XmlError::Empty);
    }
    let end = reader.buffer_position();
    if builder.depth() > 0 {
        return Err(XmlError::Syntax {
            offset: end,
            message: "unclosed element at end of input".into(),
        });
    }
    builder.finish().map_err(|source| XmlError::Tree {
        offset: end,
        source,
    })
}

pub fn parse_xml_bytes(data: &[u8]) -> Result<LabelledTree, XmlError> {
    parse_xml(data)
}

pub fn parse_xml_file(path: impl AsRef<Path>) -> Result<LabelledTree, XmlError> {
    parse_xml(BufReader::new(File::open(path)?))
}
