use bamgate::scenario::{registry_config, registry_ids, registry_text};

fn source() -> String {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../paper.md");
    std::fs::read_to_string(path).expect("paper.md next to the workspace")
}

fn symbol(channel: &str) -> String {
    let (head, idx) = channel.split_at(channel.find(|c: char| c.is_ascii_digit()).unwrap());
    let sub = if idx.len() > 1 { format!("{{{idx}}}") } else { idx.to_string() };
    format!("\\{head}_{sub}")
}

#[test]
fn coefficients_match_the_printed_text() {
    let text = source();
    let mut lists = 0;
    for id in registry_ids() {
        let config = registry_config(id).unwrap();
        for (channel, _) in &config.channels {
            let value = registry_text(id, channel).unwrap();
            if value.starts_with('[') {
                assert!(text.contains(value), "{id} {channel}: {value}");
                lists += 1;
            } else if let Some((factor, _)) = value.split_once('*') {
                assert!(text.contains(&format!("{factor}\\times")), "{id} {channel}: {value}");
            } else {
                let sym = symbol(channel);
                let printed = [format!("{sym}=2\\pi\\times{value}"), format!("{sym} = 2\\pi\\times{value}")];
                assert!(printed.iter().any(|p| text.contains(p.as_str())), "{id} {channel}: {sym} = {value}");
            }
        }
    }
    assert!(lists >= 24, "only {lists} coefficient lists");
}

#[test]
fn registry_covers_every_published_block() {
    let ids = registry_ids();
    assert_eq!(ids.len(), 12);
    for id in ["fig2a", "fig2c", "fig3a", "fig3c", "fig4", "fig5", "figS4a", "figS4c", "figS5a", "figS5c", "figS7a", "figS7c"] {
        assert!(ids.contains(&id), "{id}");
    }
    assert!(registry_config("fig4").unwrap().dual_pulse);
}
