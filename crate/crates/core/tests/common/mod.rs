//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use threadgrid::corpus::parse_thread;
use threadgrid::{ParentVector, Thread};

/// The five-post "registry cleaner" thread, hand-annotated with entity roles.
pub const REGISTRY_THREAD: &str = r#"{"thread_id":"registry-cleaner","posts":[
{"post_id":1,"author":"barspinboy","sentences":[
 {"text":"im having troubles since i uninstall some of my apps, then when i checked my system registry bunch of junks were left behind by the apps i already uninstall.","annotations":[["system","O"],["junks","X"],["apps","X"],["registry","O"],["bunch","O"]]},
 {"text":"is there any way i could clean my registry aside from expensive registry cleaners.","annotations":[["cleaner","O"],["registry","O"]]}]},
{"post_id":2,"author":"kees bakker","sentences":[
 {"text":"use regedit to delete the 'bunch of junks' you found.","annotations":[["regedit","O"],["bunch","O"],["junks","X"]]},
 {"text":"regedit is free, but depending on which applications it were ..","annotations":[["regedit","S"]]},
 {"text":"it's somewhat doubtful there will be less crashes and faster setup.","annotations":[["crashes","X"]]}]},
{"post_id":3,"author":"willy","sentences":[
 {"text":"i tend to use ccleaner (google for it) as a registry (and system) cleaner.","annotations":[["cleaner","O"],["registry","O"]]},
 {"text":"using its defaults does pretty well.","annotations":[]},
 {"text":"in no way will it cure any hardcore problems as you mentioned, \"crashes\", but it should clean some of the junk out.","annotations":[["junks","X"],["crashes","X"]]},
 {"text":"i further suggest, ..","annotations":[]}]},
{"post_id":4,"author":"caktus","sentences":[
 {"text":"try regseeker.","annotations":[["regseeker","O"]]},
 {"text":"it's free and pretty safe to use automatic.","annotations":[]},
 {"text":"then clean out temp files (don't compress any files or use indexing.)","annotations":[["files","O"]]},
 {"text":"if the c drive is compressed, then uncompress it.","annotations":[["drive","S"]]}]},
{"post_id":5,"author":"barspinboy","sentences":[
 {"text":"thanks guyz!","annotations":[]},
 {"text":"i tried all those suggestions you mentioned ccleaners regedit defragmentation and uninstalling process.","annotations":[["suggestions","O"]]},
 {"text":"it all worked out and i suffer no more from crashes and ..","annotations":[["troubles","X"]]}]}
],"parents":[null,1,1,1,4]}"#;

pub fn registry_thread() -> Thread {
    parse_thread(&REGISTRY_THREAD.replace('\n', "")).expect("fixture parses")
}

/// Expected cells for depths 0..=5, columns in the order listed.
pub const TABLE_ENTITIES: [&str; 8] = [
    "cleaner", "regedit", "troubles", "system", "junks", "apps", "registry", "bunch",
];
pub const TABLE_CELLS: [[&str; 8]; 6] = [
    ["-", "-", "-", "O", "X", "X", "O", "O"],
    ["O", "-", "-", "-", "-", "-", "O", "-"],
    ["-O-", "O--", "---", "---", "X--", "---", "-O-", "O--"],
    ["---", "S--", "---", "---", "---", "---", "---", "---"],
    ["---", "---", "---", "---", "-X-", "---", "---", "---"],
    ["--", "--", "--", "--", "--", "--", "--", "--"],
];

pub fn pv(raw: &[usize]) -> ParentVector {
    ParentVector::new(raw.to_vec()).expect("valid parent vector")
}
