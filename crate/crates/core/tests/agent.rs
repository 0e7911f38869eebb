mod common;

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::time::{Duration, Instant};

use feelgrid::agent::port::{HttpModelPort, PortIntent};
use feelgrid::agent::{
    Agent, AgentEnv, AgentQuery, AgentResponse, AnswerSource, CitedValue, ModelPort, PortError, PortReply,
    ScriptedPort, MAX_WORDS,
};
use feelgrid::chart::LoadedChart;
use feelgrid::input::{Finger, Selection, TouchContext};
use feelgrid::render::{render, TactileFrame, ViewportState, PLOT_WIDTH};

use common::*;

struct Scene {
    chart: LoadedChart,
    frame: TactileFrame,
    vp: ViewportState,
}

impl Scene {
    fn new() -> Self {
        let chart = fixture("interest_rates");
        let vp = ViewportState::initial(&chart, PLOT_WIDTH);
        let frame = render(&chart, &vp, 1).unwrap();
        Self { chart, frame, vp }
    }

    /// Touch context with the first and last quarters selected.
    fn touched(&self) -> TouchContext {
        let data: Vec<_> = self.frame.data().collect();
        let mut ctx = TouchContext::default();
        for (e, finger, t) in [
            (data[0], Finger::LeftIndex, 1000),
            (data[data.len() - 1], Finger::RightIndex, 2000),
        ] {
            ctx.cache(Selection::new(&self.chart, e, 1, finger, 0.9, t, 30_000).unwrap());
        }
        ctx
    }

    fn ask(&self, agent: &mut Agent, transcript: &str, touch: TouchContext) -> AgentResponse {
        let q = AgentQuery {
            transcript: transcript.into(),
            touch,
            chart: Some("interest_rates".into()),
            dialogue_id: "test".into(),
            turn: 1,
            t: 4000,
        };
        let env = AgentEnv {
            chart: Some(&self.chart),
            frame: Some(&self.frame),
            viewport: Some(&self.vp),
            catalogue: None,
        };
        agent.respond(&q, &env)
    }
}

const TREND: &str = "What was the trend of the interest rate data during this period?";

#[test]
fn worked_example_through_the_planner() {
    let s = Scene::new();
    let r = s.ask(&mut Agent::new(), TREND, s.touched());
    assert!(
        r.augmented.contains("point_A {quarter=2020-Q2, interest=0.25%}"),
        "{}",
        r.augmented
    );
    assert!(
        r.augmented.contains("point_B {quarter=2023-Q2, interest=3.85%}"),
        "{}",
        r.augmented
    );
    let (d, p, u) = (
        r.text.find("declined"),
        r.text.find("held at 0.10%"),
        r.text.find("rose"),
    );
    assert!(d < p && p < u && d.is_some(), "{}", r.text);
    assert!(r.word_count <= MAX_WORDS);
    assert_eq!(r.source, AnswerSource::Planner);
}

#[test]
fn without_touches_this_period_asks_for_clarification() {
    let s = Scene::new();
    let r = s.ask(&mut Agent::new(), TREND, TouchContext::default());
    assert!(r.clarification, "{}", r.text);
}

fn reply(answer: &str, task: &str, value: f64) -> PortReply {
    PortReply {
        intent: Some(PortIntent {
            category: "DataExplore".into(),
            task: Some(task.into()),
            ..Default::default()
        }),
        answer: Some(answer.into()),
        cited_values: vec![CitedValue {
            task: task.into(),
            value,
        }],
    }
}

#[test]
fn port_answer_with_a_wrong_figure_is_rejected() {
    let s = Scene::new();
    let port = ScriptedPort {
        reply: Ok(reply("The highest rate was 9.9%.", "max", 9.9)),
    };
    let r = s.ask(
        &mut Agent::with_port(Box::new(port)),
        "what is the highest interest rate?",
        TouchContext::default(),
    );
    assert_eq!(r.source, AnswerSource::Planner);
    assert!(!r.discrepancies.is_empty());
    assert!(r.text.contains("3.85%"), "{}", r.text);
}

#[test]
fn port_answer_with_verified_figures_is_used() {
    let s = Scene::new();
    let port = ScriptedPort {
        reply: Ok(reply("Rates peaked at 3.85%.", "max", 3.85)),
    };
    let r = s.ask(
        &mut Agent::with_port(Box::new(port)),
        "what is the highest interest rate?",
        TouchContext::default(),
    );
    assert_eq!(r.source, AnswerSource::Port);
    assert_eq!(r.text, "Rates peaked at 3.85%.");
}

#[test]
fn failing_port_falls_back_to_the_planner() {
    let s = Scene::new();
    let port = ScriptedPort {
        reply: Err(PortError::PortTimeout),
    };
    let r = s.ask(&mut Agent::with_port(Box::new(port)), TREND, s.touched());
    assert_eq!(r.source, AnswerSource::Planner);
    assert!(r.text.contains("3.85%"));
}

#[test]
fn silent_http_endpoint_times_out() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/", listener.local_addr().unwrap());
    // Accept and hold the connection without answering.
    let hold = std::thread::spawn(move || {
        let conn = listener.accept().map(|c| c.0);
        std::thread::sleep(Duration::from_millis(1500));
        drop(conn);
    });
    let port = HttpModelPort::new(url, 300);
    let s = Scene::new();
    let started = Instant::now();
    let r = s.ask(&mut Agent::with_port(Box::new(port.clone())), TREND, s.touched());
    assert!(started.elapsed() < Duration::from_millis(1200));
    assert_eq!(r.source, AnswerSource::Planner);
    hold.join().unwrap();

    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = HttpModelPort::new(format!("http://{}/", listener.local_addr().unwrap()), 200);
    let hold = std::thread::spawn(move || {
        let conn = listener.accept().map(|c| c.0);
        std::thread::sleep(Duration::from_millis(800));
        drop(conn);
    });
    let req = feelgrid::agent::port::PortRequest {
        version: 1,
        transcript: "x".into(),
        augmented: "x".into(),
        chart: None,
        schema: vec![],
        selections: vec![],
        catalogue: vec![],
    };
    assert_eq!(port.ask(&req), Err(PortError::PortTimeout));
    hold.join().unwrap();
}

#[test]
fn http_port_round_trip() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/", listener.local_addr().unwrap());
    let server = std::thread::spawn(move || {
        let (conn, _) = listener.accept().unwrap();
        let mut rd = BufReader::new(conn.try_clone().unwrap());
        let mut len = 0;
        loop {
            let mut line = String::new();
            rd.read_line(&mut line).unwrap();
            if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                len = v.trim().parse().unwrap();
            }
            if line == "\r\n" {
                break;
            }
        }
        let mut body = vec![0; len];
        rd.read_exact(&mut body).unwrap();
        let req: serde_json::Value = serde_json::from_slice(&body).unwrap();
        let answer = serde_json::to_string(&reply("Rates peaked at 3.85%.", "max", 3.85)).unwrap();
        let mut w = conn;
        write!(
            w,
            "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{answer}",
            answer.len()
        )
        .unwrap();
        req
    });
    let s = Scene::new();
    let r = s.ask(
        &mut Agent::with_port(Box::new(HttpModelPort::new(url, 5000))),
        "what is the highest interest rate?",
        TouchContext::default(),
    );
    let req = server.join().unwrap();
    assert_eq!(req["version"], 1);
    assert_eq!(req["chart"], "interest_rates");
    assert_eq!(r.source, AnswerSource::Port);
}
