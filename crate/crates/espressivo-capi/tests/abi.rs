//! Exercises the C ABI end to end from Rust: the same entry points,
//! pointers and ownership rules a foreign binding would use.

use std::ffi::{CStr, CString};
use std::ptr;

use espressivo_capi::*;

fn model_bytes() -> Vec<u8> {
    use espressivo::expression::{EmtGaussians, Gaussian};
    use espressivo::synth::DenormTable;
    use espressivo::ExpressionModel;

    let gaussians = |tempo: f64, coverage: f64, peak: f64| EmtGaussians {
        tempo: Gaussian::new(tempo, 0.02),
        normalized_ioi: Gaussian::new(1.0, 0.02),
        coverage: Gaussian::new(coverage, 0.05),
        volume: Gaussian::new(0.5, 0.1),
        fluctuation: Gaussian::new(0.4, 0.1),
        peak_position: Gaussian::new(peak, 0.0625),
        vibrato: Gaussian::new(0.5, 0.1),
        brightness: Gaussian::new(0.4, 0.1),
    };
    let model = ExpressionModel {
        emts: [
            ("Agitato".to_string(), gaussians(0.35, 0.55, 0.25)),
            ("Tranquillo".to_string(), gaussians(0.65, 0.95, 0.75)),
        ]
        .into(),
        denorm: DenormTable::default(),
    };
    espressivo::save_model(&model)
}

fn midi_bytes() -> Vec<u8> {
    use espressivo::score::{NoteEvent, Score, SourceKind};
    let notes = (0..8)
        .map(|k| NoteEvent::new(60 + k as u8, k as f64 * 0.5, (k as f64 + 1.0) * 0.5, 1.0))
        .collect();
    espressivo::write_midi(&Score::new(notes, 480, SourceKind::Midi).unwrap())
}

#[test]
fn version_is_a_static_string() {
    let v = unsafe { CStr::from_ptr(espr_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn full_render_extract_classify_cycle() {
    unsafe {
        let midi = midi_bytes();
        let mut score = ptr::null_mut();
        assert_eq!(espr_score_parse_midi(midi.as_ptr(), midi.len(), &mut score), EsprStatus::Ok);
        assert_eq!(espr_score_note_count(score), 8);

        let model_doc = model_bytes();
        let mut model = ptr::null_mut();
        assert_eq!(espr_model_load(model_doc.as_ptr(), model_doc.len(), &mut model), EsprStatus::Ok);
        assert_eq!(espr_model_emt_count(model), 2);
        let name = espr_model_emt_name(model, 0);
        assert!(!name.is_null());
        assert_eq!(CStr::from_ptr(name).to_str().unwrap(), "Agitato");
        espr_string_free(name);

        let emt = CString::new("Tranquillo").unwrap();
        let mut audio = ptr::null_mut();
        let mut modified = ptr::null_mut();
        let mut params_json = ptr::null_mut();
        assert_eq!(
            espr_render(score, model, emt.as_ptr(), 99, &mut audio, &mut modified, &mut params_json),
            EsprStatus::Ok
        );
        assert!(espr_audio_len(audio) > 0);
        assert_eq!(espr_audio_sample_rate(audio), 16_000);
        let samples = std::slice::from_raw_parts(espr_audio_samples(audio), espr_audio_len(audio));
        assert!(samples.iter().all(|s| s.abs() <= 1.0));

        let params_text = CStr::from_ptr(params_json).to_str().unwrap();
        let params: serde_json::Value = serde_json::from_str(params_text).unwrap();
        assert_eq!(params["params"].as_array().unwrap().len(), 8);
        espr_string_free(params_json);

        // WAV encode then decode round-trips through the ABI too.
        let mut wav_ptr = ptr::null_mut();
        let mut wav_len = 0usize;
        assert_eq!(espr_audio_to_wav(audio, &mut wav_ptr, &mut wav_len), EsprStatus::Ok);
        assert!(wav_len > 44);
        let mut decoded = ptr::null_mut();
        assert_eq!(espr_audio_from_wav(wav_ptr, wav_len, &mut decoded), EsprStatus::Ok);
        assert_eq!(espr_audio_len(decoded), espr_audio_len(audio));
        espr_bytes_free(wav_ptr, wav_len);
        espr_audio_free(decoded);

        // Features from the modified score classify back to the term.
        let features_json = espr_extract_features_json(modified, audio);
        assert!(!features_json.is_null(), "{:?}", CStr::from_ptr(espr_last_error()));
        let ranked_json = espr_classify_json(features_json, model);
        assert!(!ranked_json.is_null());
        let ranked: serde_json::Value =
            serde_json::from_str(CStr::from_ptr(ranked_json).to_str().unwrap()).unwrap();
        assert_eq!(ranked[0]["emt"], "Tranquillo");

        espr_string_free(features_json);
        espr_string_free(ranked_json);
        espr_audio_free(audio);
        espr_score_free(modified);
        espr_model_free(model);
        espr_score_free(score);
    }
}

#[test]
fn render_is_deterministic_per_seed() {
    unsafe {
        let midi = midi_bytes();
        let mut score = ptr::null_mut();
        espr_score_parse_midi(midi.as_ptr(), midi.len(), &mut score);
        let model_doc = model_bytes();
        let mut model = ptr::null_mut();
        espr_model_load(model_doc.as_ptr(), model_doc.len(), &mut model);
        let emt = CString::new("Agitato").unwrap();

        let render = |seed: u64| -> Vec<u8> {
            let mut audio = ptr::null_mut();
            assert_eq!(
                espr_render(score, model, emt.as_ptr(), seed, &mut audio, ptr::null_mut(), ptr::null_mut()),
                EsprStatus::Ok
            );
            let mut wav_ptr = ptr::null_mut();
            let mut wav_len = 0usize;
            espr_audio_to_wav(audio, &mut wav_ptr, &mut wav_len);
            let bytes = std::slice::from_raw_parts(wav_ptr, wav_len).to_vec();
            espr_bytes_free(wav_ptr, wav_len);
            espr_audio_free(audio);
            bytes
        };
        assert_eq!(render(5), render(5));
        assert_ne!(render(5), render(6));

        espr_model_free(model);
        espr_score_free(score);
    }
}

#[test]
fn error_paths_set_messages_and_codes() {
    unsafe {
        let mut score = ptr::null_mut();
        assert_eq!(espr_score_parse_midi(ptr::null(), 0, &mut score), EsprStatus::NullArgument);
        assert_eq!(
            espr_score_parse_midi(b"not midi".as_ptr(), 8, &mut score),
            EsprStatus::Parse
        );
        let msg = CStr::from_ptr(espr_last_error()).to_str().unwrap();
        assert!(msg.contains("MThd"), "{msg}");

        let midi = midi_bytes();
        espr_score_parse_midi(midi.as_ptr(), midi.len(), &mut score);
        let model_doc = model_bytes();
        let mut model = ptr::null_mut();
        espr_model_load(model_doc.as_ptr(), model_doc.len(), &mut model);

        let emt = CString::new("Presto").unwrap();
        let mut audio = ptr::null_mut();
        assert_eq!(
            espr_render(score, model, emt.as_ptr(), 1, &mut audio, ptr::null_mut(), ptr::null_mut()),
            EsprStatus::UnknownTerm
        );
        let msg = CStr::from_ptr(espr_last_error()).to_str().unwrap();
        assert!(msg.contains("Presto") && msg.contains("Agitato"), "{msg}");

        let mut m = ptr::null_mut();
        assert_eq!(espr_model_load(b"{}".as_ptr(), 2, &mut m), EsprStatus::InvalidArgument);

        let missing = CString::new("/nonexistent/manifest.json").unwrap();
        assert_eq!(espr_model_fit_manifest(missing.as_ptr(), &mut m), EsprStatus::Io);

        espr_model_free(model);
        espr_score_free(score);
    }
}

#[test]
fn generated_header_covers_the_surface() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/espressivo.h"))
        .expect("committed header");
    for symbol in [
        "EsprStatus",
        "EsprScore",
        "EsprModel",
        "EsprAudio",
        "espr_version",
        "espr_last_error",
        "espr_score_parse_midi",
        "espr_score_parse_musicxml",
        "espr_model_load",
        "espr_model_fit_manifest",
        "espr_render",
        "espr_audio_to_wav",
        "espr_extract_features_json",
        "espr_classify_json",
        "espr_string_free",
        "espr_bytes_free",
    ] {
        assert!(header.contains(symbol), "header missing {symbol}");
    }
}
