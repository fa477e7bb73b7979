mod common;

use common::*;
use eventforge_core::audit::audit_dtmax;
use eventforge_core::dvs::DvsEvent;
use eventforge_core::reconstruct::reconstruct_accurate;
use eventforge_core::stream::StreamHeader;
use eventforge_core::transcode::dvs::latent_update;
use eventforge_core::transcode::{reencode, DvsParams, DvsTranscoder, FramedTranscoder, TranscodeError};
use eventforge_core::vision::FastParams;
use eventforge_core::{synth, PixelMode, SensitivityParams, D_FILLER, D_MAX};

#[test]
fn constant_gray_first_event_within_dtmax_then_coalesces() {
    let dt_max = 255 * 120;
    let plane = framed_plane(4, 3, dt_max);
    let frames = vec![vec![128u8; 12]; 1200];
    let events = transcode(plane, &frames, SensitivityParams::LOSSLESS);
    for y in 0..3 {
        for x in 0..4 {
            let ev = pixel_events(&events, x, y);
            assert!(ev[0].t <= dt_max, "first event at {}", ev[0].t);
            // forced first event, one coalesced candidate and the closing filler
            assert!(ev.len() <= 3, "{ev:?}");
            assert_eq!(ev.last().unwrap().t, 1200 * 255);
        }
    }
    let recon = reconstruct(&plane, &events, 1200);
    assert!(recon.iter().flatten().all(|&v| v == 128));
}

#[test]
fn alternating_frames_fire_every_frame() {
    let plane = framed_plane(6, 5, 255 * 120);
    let frames: Vec<Vec<u8>> = (0..20).map(|k| vec![if k % 2 == 0 { 0 } else { 255 }; 30]).collect();
    let events = transcode(plane, &frames, SensitivityParams::LOSSLESS);
    for y in 0..5 {
        for x in 0..6 {
            let ev = pixel_events(&events, x, y);
            for k in 0..20u32 {
                let frame_end = (k + 1) * 255;
                assert!(ev.iter().any(|e| e.t > k * 255 && e.t <= frame_end), "pixel ({x},{y}) frame {k}");
            }
        }
    }
}

#[test]
fn framed_event_spans_start_on_frame_boundaries() {
    let plane = framed_plane(16, 16, 255 * 10);
    let frames: Vec<Vec<u8>> = synth::moving_squares(16, 16, 40, 2).into_iter().map(|f| f.data).collect();
    let events = transcode(plane, &frames, SensitivityParams::LOSSLESS);
    for y in 0..16 {
        for x in 0..16 {
            let ev = pixel_events(&events, x, y);
            // a level ends with a filler or a forced zero; the next level starts on a frame boundary
            for w in ev.windows(2) {
                if w[0].d == D_FILLER {
                    assert_eq!(w[0].t % 255, 0, "filler at {}", w[0].t);
                }
                assert!(w[0].t <= w[1].t);
            }
        }
    }
}

#[test]
fn noisy_static_video_threshold_lowers_event_count() {
    let plane = framed_plane(24, 24, 255 * 120);
    let frames: Vec<Vec<u8>> = synth::static_noise(24, 24, 60, 5, 3).into_iter().map(|f| f.data).collect();
    let lossless = transcode(plane, &frames, SensitivityParams::LOSSLESS).len();
    let m10 = transcode(plane, &frames, SensitivityParams { m: 10, m_max: 10, m_v: 1, feature_radius: 0 }).len();
    assert!(m10 < lossless, "{m10} vs {lossless}");
}

#[test]
fn wrong_frame_size_is_rejected() {
    let mut tc = FramedTranscoder::new(framed_plane(4, 4, 2550), SensitivityParams::LOSSLESS, PixelMode::Collapse).unwrap();
    assert!(matches!(tc.transcode_frame(&[0; 15]), Err(TranscodeError::FrameSize { expected: 16, got: 15 })));
}

#[test]
fn feature_feedback_raises_rate_near_features() {
    let plane = framed_plane(48, 48, 255 * 120);
    let frames: Vec<Vec<u8>> = synth::moving_squares(48, 48, 60, 8).into_iter().map(|f| f.data).collect();
    let sens = eventforge_core::crf::crf_sensitivity(9).unwrap();
    let plain = transcode(plane, &frames, sens).len();
    let mut tc = FramedTranscoder::new(plane, sens, PixelMode::Collapse).unwrap().with_feature_feedback(FastParams::default());
    let mut fed = 0;
    let mut features = 0;
    for f in &frames {
        fed += tc.transcode_frame(f).unwrap().len();
        features += tc.last_features().len();
    }
    fed += tc.finish().len();
    assert!(features > 0);
    assert!(fed > plain, "{fed} vs {plain}");
}

#[test]
fn feedback_square_counts() {
    let mut tc = FramedTranscoder::new(framed_plane(30, 30, 2550), SensitivityParams::LOSSLESS, PixelMode::Collapse).unwrap();
    assert_eq!(tc.feature_feedback(&[(10, 10)], 2), 25);
    assert_eq!(tc.feature_feedback(&[(10, 10)], 0), 1);
    assert_eq!(tc.feature_feedback(&[(0, 0)], 2), 9);
}

#[test]
fn dvs_single_event_and_inverse() {
    let l = latent_update(0.5, 1, 0.15);
    assert!((l - ((1.5f64.ln() + 0.15).exp() - 1.0)).abs() < 1e-12);
    assert!((l - 0.7428).abs() < 1e-4);
    assert!((latent_update(l, -1, 0.15) - 0.5).abs() < 1e-9);

    let mut tc = DvsTranscoder::new(DvsParams::new(4, 4), SensitivityParams::LOSSLESS, PixelMode::Collapse).unwrap();
    let mut out = Vec::new();
    tc.push(DvsEvent::new(1, 1, 1, 500), &mut out).unwrap();
    out.extend(tc.finish(Some(600)));
    assert!((tc.latent(1, 1) - l).abs() < 1e-12);
}

#[test]
fn dvs_silent_plane_reconstructs_mid_gray() {
    let params = DvsParams::new(6, 4);
    let mut tc = DvsTranscoder::new(params, SensitivityParams::LOSSLESS, PixelMode::Collapse).unwrap();
    let mut events = tc.push_all(&[]).unwrap();
    events.extend(tc.finish(Some(200_000)));
    assert!(audit_dtmax(&events, params.dt_max).is_empty());
    let plane = params.plane();
    let frames = reconstruct_accurate(&plane, &events, plane.dt_ref, None, Some(200_000));
    assert_eq!(frames.len(), 100);
    for f in &frames {
        for v in &f.values {
            assert!((v - 127.5).abs() < 1.0, "{v}");
        }
    }
}

#[test]
fn dvs_out_of_plane_events_are_counted() {
    let mut tc = DvsTranscoder::new(DvsParams::new(4, 4), SensitivityParams::LOSSLESS, PixelMode::Collapse).unwrap();
    tc.push_all(&[DvsEvent::new(9, 0, 1, 10), DvsEvent::new(0, 0, 1, 20)]).unwrap();
    assert_eq!(tc.dropped(), 1);
}

#[test]
fn dvs_reordering_window() {
    let mut tc = DvsTranscoder::new(DvsParams::new(4, 4), SensitivityParams::LOSSLESS, PixelMode::Collapse).unwrap();
    assert!(tc.push_all(&[DvsEvent::new(0, 0, 1, 5000), DvsEvent::new(1, 0, 1, 4500)]).is_ok());
    let mut tc = DvsTranscoder::new(DvsParams::new(4, 4), SensitivityParams::LOSSLESS, PixelMode::Collapse).unwrap();
    let err = tc.push_all(&[DvsEvent::new(0, 0, 1, 5000), DvsEvent::new(1, 0, 1, 3000)]);
    assert!(matches!(err, Err(TranscodeError::OutOfOrder { .. })));
}

#[test]
fn reencode_identity_and_longer_dtmax() {
    let plane = framed_plane(20, 20, 255 * 4);
    let frames: Vec<Vec<u8>> = synth::static_noise(20, 20, 90, 3, 12).into_iter().map(|f| f.data).collect();
    let events = transcode(plane, &frames, SensitivityParams::LOSSLESS);
    let header = StreamHeader::new(plane, PixelMode::Collapse);

    let same = reencode(&header, &events, plane, SensitivityParams::LOSSLESS, PixelMode::Collapse).unwrap();
    let a = reconstruct(&plane, &events, 90);
    let b = reconstruct(&plane, &same, 90);
    assert!(max_error(&a, &b) <= 1);

    let longer = common::framed_plane(20, 20, 255 * 4 * 60);
    let noisy_sens = SensitivityParams { m: 6, m_max: 6, m_v: 1, feature_radius: 0 };
    let slow = reencode(&header, &events, longer, noisy_sens, PixelMode::Collapse).unwrap();
    assert!(slow.len() < events.len(), "{} vs {}", slow.len(), events.len());
    assert!(audit_dtmax(&slow, longer.dt_max).is_empty());
    assert!(slow.iter().all(|e| e.d <= D_MAX || e.d >= 254));

    assert!(reencode(&header, &[], plane, SensitivityParams::LOSSLESS, PixelMode::Collapse).unwrap().is_empty());
    let other = framed_plane(10, 20, 255 * 4);
    assert!(matches!(
        reencode(&header, &events, other, SensitivityParams::LOSSLESS, PixelMode::Collapse),
        Err(TranscodeError::PlaneMismatch(..))
    ));
}
