//! 8-bit interleaved image buffer.

/// Gray (1 channel) or interleaved RGB (3 channels) 8-bit image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub width: u16,
    pub height: u16,
    pub channels: u8,
    pub data: Vec<u8>,
}

impl Frame {
    pub fn new(width: u16, height: u16, channels: u8) -> Self {
        Self { width, height, channels, data: vec![0; width as usize * height as usize * channels as usize] }
    }

    pub fn from_data(width: u16, height: u16, channels: u8, data: Vec<u8>) -> Option<Self> {
        (data.len() == width as usize * height as usize * channels as usize).then_some(Self { width, height, channels, data })
    }

    pub fn index(&self, x: u16, y: u16, c: u8) -> usize {
        (y as usize * self.width as usize + x as usize) * self.channels as usize + c as usize
    }

    pub fn get(&self, x: u16, y: u16, c: u8) -> u8 {
        self.data[self.index(x, y, c)]
    }

    pub fn set(&mut self, x: u16, y: u16, c: u8, v: u8) {
        let i = self.index(x, y, c);
        self.data[i] = v;
    }

    /// Channel mean per pixel.
    pub fn to_gray(&self) -> Vec<u8> {
        let ch = self.channels as usize;
        self.data.chunks_exact(ch).map(|px| (px.iter().map(|&v| v as u32).sum::<u32>() / ch as u32) as u8).collect()
    }
}
